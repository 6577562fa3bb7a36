#include "drdam/distributed_dam.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "drdam/errors.hpp"

namespace drdam {
namespace {

// RAII registration of scratch storage with an optional meter.
class Scratch {
public:
    Scratch(WorkspaceMeter* meter, std::size_t words) : meter_(meter), words_(words) {
        if (meter_) meter_->allocate(words_);
    }
    ~Scratch() {
        if (meter_) meter_->release(words_);
    }
    Scratch(const Scratch&) = delete;
    Scratch& operator=(const Scratch&) = delete;

private:
    WorkspaceMeter* meter_;
    std::size_t words_;
};

void check_eval(const DistributedMemory& dm, std::span<const double> x) {
    if (dm.num_memories == 0)
        throw std::invalid_argument("distributed memory holds no patterns");
    vec::require_length(x, dm.spec.dim, "distributed energy input");
    if (!vec::all_finite(x)) throw std::domain_error("distributed energy: non-finite input");
}

// One pass over the projection rows at the normalized point y, accumulating
//   s = <phi(y), T>   and, when z != nullptr,   z = (d phi(y) / d y)^T T.
// Keeps only one row plus the scaled input in flight.
double stream_pass(const FeatureMapSpec& spec, std::span<const double> tensor,
                   std::span<const double> y, double* z, WorkspaceMeter* meter) {
    const std::size_t d = spec.dim;
    const double sqb = std::sqrt(spec.beta);
    const double scale = [&] {
        switch (spec.kind) {
        case BasisKind::Cos: return std::sqrt(2.0 / static_cast<double>(spec.num_projections));
        case BasisKind::SinCos: return 1.0 / std::sqrt(static_cast<double>(spec.num_projections));
        case BasisKind::Exp: return 1.0 / std::sqrt(static_cast<double>(spec.num_projections));
        case BasisKind::ExpExp:
            return 1.0 / std::sqrt(2.0 * static_cast<double>(spec.num_projections));
        }
        return 0.0;
    }();

    Scratch scaled_guard(meter, d);
    std::vector<double> u(d);
    for (std::size_t i = 0; i < d; ++i) u[i] = sqb * y[i];
    const double un2 = vec::norm2(u);

    // Row machinery inside the iteration: one D buffer in iid mode, one
    // D x D block in orthogonal mode (documented relaxation to O(D^2 + Y)).
    Scratch row_guard(meter, spec.orthogonal ? d * d + d : d);

    double s = 0.0;
    detail::for_each_projection_row(
        spec, [&](std::size_t a, std::span<const double> omega, double bias) {
            const double p = vec::dot(omega, u);
            switch (spec.kind) {
            case BasisKind::Cos: {
                const double f = scale * std::cos(p + bias);
                s += f * tensor[a];
                if (z) {
                    const double coeff = -scale * std::sin(p + bias) * tensor[a] * sqb;
                    for (std::size_t i = 0; i < d; ++i) z[i] += coeff * omega[i];
                }
                break;
            }
            case BasisKind::SinCos: {
                const double fc = scale * std::cos(p);
                const double fs = scale * std::sin(p);
                s += fc * tensor[2 * a];
                s += fs * tensor[2 * a + 1];
                if (z) {
                    const double coeff = sqb * (fc * tensor[2 * a + 1] - fs * tensor[2 * a]);
                    for (std::size_t i = 0; i < d; ++i) z[i] += coeff * omega[i];
                }
                break;
            }
            case BasisKind::Exp: {
                const double f = scale * std::exp(p + bias - un2);
                s += f * tensor[a];
                if (z) {
                    const double coeff = sqb * f * tensor[a];
                    for (std::size_t i = 0; i < d; ++i) z[i] += coeff * omega[i];
                }
                break;
            }
            case BasisKind::ExpExp: {
                const double fp = scale * std::exp(p - un2);
                const double fm = scale * std::exp(-p - un2);
                s += fp * tensor[2 * a];
                s += fm * tensor[2 * a + 1];
                if (z) {
                    const double coeff = sqb * (fp * tensor[2 * a] - fm * tensor[2 * a + 1]);
                    for (std::size_t i = 0; i < d; ++i) z[i] += coeff * omega[i];
                }
                break;
            }
            }
        });

    // The exp(-beta ||y||^2) prefactor contributes -2 beta y_i per feature.
    if (z && (spec.kind == BasisKind::Exp || spec.kind == BasisKind::ExpExp)) {
        for (std::size_t i = 0; i < d; ++i) z[i] += -2.0 * spec.beta * y[i] * s;
    }
    return s;
}

} // namespace

DistributedMemory proc_mems(const FeatureMapSpec& spec, std::span<const Pattern> memories,
                            bool with_companion) {
    spec.validate();
    for (const Pattern& m : memories) vec::require_length(m, spec.dim, "proc_mems memory");

    DistributedMemory dm;
    dm.spec = spec;
    dm.tensor.assign(spec.feature_len(), 0.0);
    dm.num_memories = memories.size();
    if (with_companion) dm.companion.emplace(spec.feature_len() * spec.dim, 0.0);

    // Compensated accumulation: one extra feature-sized buffer keeps the
    // batch sum accurate without materializing per-memory partial sums.
    std::vector<double> comp(spec.feature_len(), 0.0);
    for (const Pattern& m : memories) {
        const std::vector<double> phi = featurize(spec, m);
        for (std::size_t f = 0; f < phi.size(); ++f) {
            const double yv = phi[f] - comp[f];
            const double t = dm.tensor[f] + yv;
            comp[f] = (t - dm.tensor[f]) - yv;
            dm.tensor[f] = t;
        }
        if (with_companion) {
            double* r = dm.companion->data();
            for (std::size_t f = 0; f < phi.size(); ++f)
                for (std::size_t i = 0; i < spec.dim; ++i) r[f * spec.dim + i] += phi[f] * m[i];
        }
    }
    return dm;
}

void add_memory_distributed(DistributedMemory& dm, std::span<const double> xi) {
    vec::require_length(xi, dm.spec.dim, "add_memory_distributed");
    const std::vector<double> phi = featurize(dm.spec, xi);
    for (std::size_t f = 0; f < phi.size(); ++f) dm.tensor[f] += phi[f];
    if (dm.companion) {
        double* r = dm.companion->data();
        for (std::size_t f = 0; f < phi.size(); ++f)
            for (std::size_t i = 0; i < dm.spec.dim; ++i) r[f * dm.spec.dim + i] += phi[f] * xi[i];
    }
    dm.num_memories += 1;
}

double energy_approx(const DistributedMemory& dm, const ClipConfig& clip,
                     std::span<const double> x, Normalization normalization) {
    check_eval(dm, x);
    const Pattern y = detail::apply_normalization(normalization, x);
    const double s = stream_pass(dm.spec, dm.tensor, y, nullptr, nullptr);
    return -std::log(std::max(s, clip.epsilon_log)) / dm.spec.beta;
}

Pattern grad_comp(const DistributedMemory& dm, const ClipConfig& clip, std::span<const double> x,
                  Normalization normalization, WorkspaceMeter* meter) {
    check_eval(dm, x);
    const std::size_t d = dm.spec.dim;

    Scratch y_guard(meter, d);
    const Pattern y = detail::apply_normalization(normalization, x);

    Scratch z_guard(meter, d);
    Pattern z(d, 0.0);
    const double s = stream_pass(dm.spec, dm.tensor, y, z.data(), meter);

    // Clipped energy is locally constant.
    if (!(s > clip.epsilon_log)) return Pattern(d, 0.0);

    const double q = -1.0 / (dm.spec.beta * s);
    for (double& v : z) v *= q;
    return detail::normalization_jacobian_apply(normalization, x, z);
}

Pattern grad_l2_specialized(const DistributedMemory& dm, const ClipConfig& clip,
                            std::span<const double> x) {
    if (!dm.companion)
        throw std::invalid_argument("grad_l2_specialized: companion store not present");
    check_eval(dm, x);
    const std::size_t d = dm.spec.dim;

    const std::vector<double> phi = featurize(dm.spec, x);
    const double denom = std::max(vec::dot(phi, dm.tensor), clip.epsilon_log);

    const double* r = dm.companion->data();
    Pattern num(d, 0.0);
    for (std::size_t f = 0; f < phi.size(); ++f) {
        const double w = phi[f];
        const double* row = r + f * d;
        for (std::size_t i = 0; i < d; ++i) num[i] += w * row[i];
    }
    Pattern grad(d);
    for (std::size_t i = 0; i < d; ++i) grad[i] = x[i] - num[i] / denom;
    return grad;
}

// --- serialization ----------------------------------------------------------

namespace {

constexpr char kMagic[6] = {'D', 'R', 'D', 'A', 'M', '1'};

void put_bytes(std::ostream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void put_u8(std::ostream& out, std::uint8_t v) { put_bytes(out, &v, 1); }

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    put_bytes(out, b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    put_bytes(out, b, 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

struct Reader {
    std::istream& in;
    std::size_t offset = 0;

    void bytes(void* p, std::size_t n, const char* what) {
        in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n)
            throw ParseError(std::string("truncated stream while reading ") + what, offset);
        offset += n;
    }
    std::uint8_t u8(const char* what) {
        std::uint8_t v;
        bytes(&v, 1, what);
        return v;
    }
    std::uint32_t u32(const char* what) {
        unsigned char b[4];
        bytes(b, 4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }
    std::uint64_t u64(const char* what) {
        unsigned char b[8];
        bytes(b, 8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }
    double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
};

} // namespace

void save_distributed(const DistributedMemory& dm, std::ostream& out) {
    dm.spec.validate();
    put_bytes(out, kMagic, 6);
    put_u32(out, static_cast<std::uint32_t>(dm.spec.dim));
    put_u32(out, static_cast<std::uint32_t>(dm.spec.num_projections));
    put_u8(out, static_cast<std::uint8_t>(dm.spec.kind));
    put_f64(out, dm.spec.beta);
    put_u64(out, dm.spec.seed);
    put_u8(out, dm.spec.orthogonal ? 1 : 0);
    put_u64(out, dm.num_memories);
    put_u8(out, dm.companion ? 1 : 0);
    for (double v : dm.tensor) put_f64(out, v);
    if (dm.companion)
        for (double v : *dm.companion) put_f64(out, v);
    if (!out) throw std::runtime_error("save_distributed: write failed");
}

DistributedMemory load_distributed(std::istream& in) {
    Reader r{in};
    char magic[6];
    const std::size_t magic_offset = r.offset;
    r.bytes(magic, 6, "magic");
    if (std::memcmp(magic, kMagic, 6) != 0)
        throw ParseError("bad magic, expected DRDAM1", magic_offset);

    DistributedMemory dm;
    dm.spec.dim = r.u32("dim");
    dm.spec.num_projections = r.u32("num_projections");
    const std::size_t kind_offset = r.offset;
    const std::uint8_t kind = r.u8("basis kind");
    if (kind > 3) throw ParseError("unknown basis kind tag", kind_offset);
    dm.spec.kind = static_cast<BasisKind>(kind);
    dm.spec.beta = r.f64("beta");
    dm.spec.seed = r.u64("seed");
    const std::size_t orth_offset = r.offset;
    const std::uint8_t orth = r.u8("orthogonal flag");
    if (orth > 1) throw ParseError("invalid orthogonal flag", orth_offset);
    dm.spec.orthogonal = orth == 1;
    dm.num_memories = r.u64("memory count");
    const std::size_t flag_offset = r.offset;
    const std::uint8_t with_r = r.u8("companion flag");
    if (with_r > 1) throw ParseError("invalid companion flag", flag_offset);

    const std::size_t header_end = r.offset;
    if (dm.spec.dim < 1 || dm.spec.num_projections < 1 || !(dm.spec.beta > 0.0))
        throw ParseError("invalid header field values", header_end);

    dm.tensor.resize(dm.spec.feature_len());
    for (double& v : dm.tensor) v = r.f64("tensor data");
    if (with_r == 1) {
        dm.companion.emplace(dm.spec.feature_len() * dm.spec.dim);
        for (double& v : *dm.companion) v = r.f64("companion data");
    }
    return dm;
}

void save_distributed_file(const DistributedMemory& dm, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    save_distributed(dm, out);
}

DistributedMemory load_distributed_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return load_distributed(in);
}

} // namespace drdam

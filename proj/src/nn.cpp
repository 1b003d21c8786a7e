#include "purelearn/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "purelearn/errors.hpp"

namespace pl {

Mlp init_mlp(size_t in_dim, const std::vector<size_t>& widths, Rng& rng) {
    if (widths.empty()) throw ConfigError("mlp needs at least one layer");
    Mlp mlp;
    size_t fan_in = in_dim;
    for (size_t out : widths) {
        if (fan_in == 0) throw ConfigError("zero fan-in layer");
        if (out == 0) throw ConfigError("zero-width layer");
        double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        LinearLayer layer{Tensor(out, fan_in), Tensor(1, out, 0.0)};
        for (size_t i = 0; i < layer.W.size(); ++i)
            layer.W.data()[i] = rng.uniform(-bound, bound);
        mlp.layers.push_back(std::move(layer));
        fan_in = out;
    }
    return mlp;
}

Tensor forward_mlp(const Mlp& mlp, const Tensor& x) {
    if (mlp.layers.empty()) throw Error("forward through empty mlp");
    Tensor h = x;
    for (size_t i = 0; i < mlp.layers.size(); ++i) {
        h = add_rowvec(matmul_nt(h, mlp.layers[i].W), mlp.layers[i].b);
        if (i + 1 < mlp.layers.size()) h = relu(h);
    }
    h.check_finite("forward_mlp");
    return h;
}

TapedMlp stage_mlp(Tape& tape, const Mlp& mlp, bool requires_grad) {
    TapedMlp staged;
    for (const LinearLayer& layer : mlp.layers) {
        staged.weights.push_back(tape.input(layer.W, requires_grad));
        staged.biases.push_back(tape.input(layer.b, requires_grad));
    }
    return staged;
}

Var forward_mlp(Tape& tape, const TapedMlp& staged, Var x) {
    if (staged.weights.empty()) throw Error("forward through empty mlp");
    Var h = x;
    for (size_t i = 0; i < staged.weights.size(); ++i) {
        h = tape.linear(h, staged.weights[i], staged.biases[i]);
        if (i + 1 < staged.weights.size()) h = tape.relu(h);
    }
    return h;
}

void clip_weights(Mlp& mlp, double c) {
    if (!(c > 0.0)) throw ConfigError("clip bound must be positive");
    for (LinearLayer& layer : mlp.layers) {
        for (Tensor* t : {&layer.W, &layer.b}) {
            double* p = t->data();
            for (size_t i = 0; i < t->size(); ++i) p[i] = std::clamp(p[i], -c, c);
        }
    }
}

double max_abs_param(const Mlp& mlp) {
    double mx = 0.0;
    for (const LinearLayer& layer : mlp.layers) {
        for (const Tensor* t : {&layer.W, &layer.b}) {
            const double* p = t->data();
            for (size_t i = 0; i < t->size(); ++i) mx = std::max(mx, std::abs(p[i]));
        }
    }
    return mx;
}

double spectral_norm(const Tensor& w, size_t iters, uint64_t seed) {
    if (w.size() == 0) return 0.0;
    Rng init(seed);
    std::vector<double> v(w.cols());
    double norm = 0.0;
    for (double& vi : v) {
        vi = init.normal();
        norm += vi * vi;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) { v[0] = 1.0; norm = 1.0; }
    for (double& vi : v) vi /= norm;

    std::vector<double> u(w.rows());
    double sigma = 0.0;
    for (size_t it = 0; it < iters; ++it) {
        // u = W v, normalized
        double un = 0.0;
        for (size_t r = 0; r < w.rows(); ++r) {
            double acc = 0.0;
            for (size_t c = 0; c < w.cols(); ++c) acc += w.at(r, c) * v[c];
            u[r] = acc;
            un += acc * acc;
        }
        un = std::sqrt(un);
        sigma = un;
        if (un == 0.0) return 0.0;
        for (double& ur : u) ur /= un;
        // v = W^T u, normalized
        double vn = 0.0;
        for (size_t c = 0; c < w.cols(); ++c) {
            double acc = 0.0;
            for (size_t r = 0; r < w.rows(); ++r) acc += w.at(r, c) * u[r];
            v[c] = acc;
            vn += acc * acc;
        }
        vn = std::sqrt(vn);
        if (vn == 0.0) return 0.0;
        for (double& vc : v) vc /= vn;
    }
    return sigma;
}

double lipschitz_product_bound(const Mlp& mlp) {
    double prod = 1.0;
    for (const LinearLayer& layer : mlp.layers) prod *= spectral_norm(layer.W);
    return prod;
}

namespace {

void hash_bytes(uint64_t& h, const void* data, size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
}

void hash_mlp_into(uint64_t& h, const Mlp& mlp) {
    uint64_t count = mlp.layers.size();
    hash_bytes(h, &count, sizeof count);
    for (const LinearLayer& layer : mlp.layers) {
        uint64_t dims[2] = {layer.out_dim(), layer.in_dim()};
        hash_bytes(h, dims, sizeof dims);
        hash_bytes(h, layer.W.data(), layer.W.size() * sizeof(double));
        hash_bytes(h, layer.b.data(), layer.b.size() * sizeof(double));
    }
}

constexpr uint64_t kFnvBasis = 14695981039346656037ull;

void write_u32(std::ofstream& out, uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 4);
}

void write_f64s(std::ofstream& out, const double* p, size_t n) {
    // Little-endian f64; memcpy through u64 to stay byte-exact regardless of
    // strict-aliasing concerns.
    for (size_t i = 0; i < n; ++i) {
        uint64_t bits;
        std::memcpy(&bits, &p[i], sizeof bits);
        unsigned char buf[8];
        for (int k = 0; k < 8; ++k) buf[k] = static_cast<unsigned char>((bits >> (8 * k)) & 0xff);
        out.write(reinterpret_cast<const char*>(buf), 8);
    }
}

struct Reader {
    std::ifstream in;
    size_t offset = 0;
    explicit Reader(const std::string& path) : in(path, std::ios::binary) {
        if (!in) throw IoError("cannot open " + path);
    }
    void read(void* dst, size_t n, const char* what) {
        in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (in.gcount() != static_cast<std::streamsize>(n))
            throw FormatError(std::string("truncated checkpoint while reading ") + what, offset);
        offset += n;
    }
    uint32_t read_u32(const char* what) {
        unsigned char buf[4];
        read(buf, 4, what);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf[i]) << (8 * i);
        return v;
    }
    void read_f64s(double* dst, size_t n, const char* what) {
        size_t start = offset;
        std::vector<unsigned char> buf(n * 8);
        read(buf.data(), buf.size(), what);
        for (size_t i = 0; i < n; ++i) {
            uint64_t bits = 0;
            for (int k = 0; k < 8; ++k) bits |= static_cast<uint64_t>(buf[i * 8 + k]) << (8 * k);
            std::memcpy(&dst[i], &bits, sizeof bits);
            if (!std::isfinite(dst[i]))
                throw FormatError(std::string("non-finite parameter in ") + what, start + i * 8);
        }
    }
};

void write_mlp(std::ofstream& out, const Mlp& mlp) {
    write_u32(out, static_cast<uint32_t>(mlp.layers.size()));
    for (const LinearLayer& layer : mlp.layers) {
        write_u32(out, static_cast<uint32_t>(layer.out_dim()));
        write_u32(out, static_cast<uint32_t>(layer.in_dim()));
        write_f64s(out, layer.W.data(), layer.W.size());
        write_f64s(out, layer.b.data(), layer.b.size());
    }
}

Mlp read_mlp(Reader& r) {
    uint32_t count = r.read_u32("layer count");
    if (count == 0 || count > 64) throw FormatError("implausible layer count", r.offset - 4);
    Mlp mlp;
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t out = r.read_u32("layer out-dim");
        uint32_t in = r.read_u32("layer in-dim");
        if (out == 0 || in == 0) throw FormatError("zero layer dimension", r.offset - 8);
        if (static_cast<uint64_t>(out) * in > (1ull << 28))
            throw FormatError("implausible layer size", r.offset - 8);
        LinearLayer layer{Tensor(out, in), Tensor(1, out)};
        r.read_f64s(layer.W.data(), layer.W.size(), "weights");
        r.read_f64s(layer.b.data(), layer.b.size(), "biases");
        mlp.layers.push_back(std::move(layer));
    }
    return mlp;
}

}  // namespace

uint64_t mlp_hash(const Mlp& mlp) {
    uint64_t h = kFnvBasis;
    hash_mlp_into(h, mlp);
    return h;
}

uint64_t model_hash(const ModelParams& params) {
    uint64_t h = kFnvBasis;
    hash_mlp_into(h, params.extractor);
    hash_mlp_into(h, params.classifier);
    hash_mlp_into(h, params.critic);
    return h;
}

void save_model(const ModelParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write("PLM1", 4);
    write_mlp(out, params.extractor);
    write_mlp(out, params.classifier);
    write_mlp(out, params.critic);
    out.flush();
    if (!out) throw IoError("write failed for " + path);
}

ModelParams load_model(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.read(magic, 4, "magic");
    if (std::memcmp(magic, "PLM1", 4) != 0) throw FormatError("bad checkpoint magic", 0);
    ModelParams params;
    params.extractor = read_mlp(r);
    params.classifier = read_mlp(r);
    params.critic = read_mlp(r);
    char extra;
    r.in.read(&extra, 1);
    if (r.in.gcount() != 0) throw FormatError("trailing bytes after checkpoint", r.offset);
    return params;
}

}  // namespace pl

#include "purelearn/data.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "purelearn/errors.hpp"

namespace pl {

namespace {

// Unit-norm random prototypes with pairwise distance >= min_dist. Each vector
// is redrawn until it clears every earlier one; a draw budget keeps
// impossible configurations from hanging.
std::vector<std::vector<double>> make_prototypes(size_t count, size_t dim, double min_dist,
                                                 Rng& rng) {
    constexpr size_t kMaxAttempts = 10000;
    std::vector<std::vector<double>> protos;
    for (size_t k = 0; k < count; ++k) {
        bool placed = false;
        for (size_t attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
            std::vector<double> v(dim);
            double norm = 0.0;
            for (double& vi : v) {
                vi = rng.normal();
                norm += vi * vi;
            }
            norm = std::sqrt(norm);
            if (norm < 1e-12) continue;
            for (double& vi : v) vi /= norm;
            placed = true;
            for (const auto& prev : protos) {
                double d2 = 0.0;
                for (size_t i = 0; i < dim; ++i) {
                    double diff = v[i] - prev[i];
                    d2 += diff * diff;
                }
                if (d2 < min_dist * min_dist) {
                    placed = false;
                    break;
                }
            }
            if (placed) protos.push_back(std::move(v));
        }
        if (!placed)
            throw ConfigError("prototype separation " + std::to_string(min_dist) +
                              " unsatisfiable for " + std::to_string(count) + " classes in dim " +
                              std::to_string(dim));
    }
    return protos;
}

enum class Split { train, test, source };

Dataset make_split(const SyntheticGenConfig& cfg, Split split, size_t count,
                   const std::vector<std::vector<double>>& task_protos,
                   const std::vector<std::vector<double>>& nuis_protos, Rng& rng) {
    Dataset ds;
    ds.feat_dim = cfg.d_task + cfg.d_nuis;
    ds.has_task_label = split != Split::source;
    ds.has_nuisance_label = true;
    ds.task_classes = cfg.task_classes;
    ds.nuis_classes = cfg.nuis_classes;
    ds.features.resize(count * ds.feat_dim);
    if (ds.has_task_label) ds.y.resize(count);
    ds.y_tir.resize(count);
    ds.latents.resize(count * 2);

    for (size_t i = 0; i < count; ++i) {
        auto yc = static_cast<uint16_t>(rng.next_u64(cfg.task_classes));
        uint16_t yt;
        if (split == Split::train && rng.uniform() < cfg.train_bias_rho) {
            yt = bias_map(yc, cfg.nuis_classes);
        } else {
            yt = static_cast<uint16_t>(rng.next_u64(cfg.nuis_classes));
        }
        float* x = ds.features.data() + i * ds.feat_dim;
        for (size_t d = 0; d < cfg.d_task; ++d)
            x[d] = static_cast<float>(task_protos[yc][d] + cfg.noise_sigma * rng.normal());
        for (size_t d = 0; d < cfg.d_nuis; ++d)
            x[cfg.d_task + d] =
                static_cast<float>(nuis_protos[yt][d] + cfg.noise_sigma * rng.normal());
        if (ds.has_task_label) ds.y[i] = yc;
        ds.y_tir[i] = yt;
        ds.latents[i * 2] = static_cast<float>(yc);
        ds.latents[i * 2 + 1] = static_cast<float>(yt);
    }
    return ds;
}

}  // namespace

SyntheticData generate_synthetic_biased(const SyntheticGenConfig& cfg) {
    if (cfg.d_task == 0 || cfg.d_nuis == 0) throw ConfigError("feature dims must be >= 1");
    if (cfg.task_classes == 0 || cfg.nuis_classes == 0)
        throw ConfigError("class counts must be >= 1");
    if (cfg.train_bias_rho < 0.0 || cfg.train_bias_rho > 1.0)
        throw ConfigError("train bias correlation must lie in [0, 1]");
    if (!(cfg.noise_sigma >= 0.0)) throw ConfigError("noise sigma must be >= 0");
    if (!(cfg.prototype_scale >= 0.0)) throw ConfigError("prototype scale must be >= 0");

    Rng root(cfg.seed);
    Rng proto_task_rng = root.derive("prototypes-task");
    Rng proto_nuis_rng = root.derive("prototypes-nuis");
    auto task_protos =
        make_prototypes(cfg.task_classes, cfg.d_task, cfg.prototype_scale, proto_task_rng);
    auto nuis_protos =
        make_prototypes(cfg.nuis_classes, cfg.d_nuis, cfg.prototype_scale, proto_nuis_rng);

    SyntheticData out;
    Rng train_rng = root.derive("split-train");
    Rng test_rng = root.derive("split-test");
    Rng source_rng = root.derive("split-source");
    out.train = make_split(cfg, Split::train, cfg.n_train, task_protos, nuis_protos, train_rng);
    out.test = make_split(cfg, Split::test, cfg.n_test, task_protos, nuis_protos, test_rng);
    out.source =
        make_split(cfg, Split::source, cfg.n_source, task_protos, nuis_protos, source_rng);
    return out;
}

namespace {

void put_u16(std::ofstream& out, uint16_t v) {
    unsigned char buf[2] = {static_cast<unsigned char>(v & 0xff),
                            static_cast<unsigned char>(v >> 8)};
    out.write(reinterpret_cast<const char*>(buf), 2);
}

void put_u32(std::ofstream& out, uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 4);
}

void put_f32(std::ofstream& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put_u32(out, bits);
}

struct DataReader {
    std::ifstream in;
    size_t offset = 0;
    explicit DataReader(const std::string& path) : in(path, std::ios::binary) {
        if (!in) throw IoError("cannot open " + path);
    }
    bool try_read(void* dst, size_t n) {
        in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (in.gcount() == 0 && n > 0 && in.eof()) return false;
        if (in.gcount() != static_cast<std::streamsize>(n)) throw FormatError("truncated dataset", offset);
        offset += n;
        return true;
    }
    void read(void* dst, size_t n, const char* what) {
        in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (in.gcount() != static_cast<std::streamsize>(n))
            throw FormatError(std::string("truncated dataset while reading ") + what, offset);
        offset += n;
    }
    uint16_t read_u16(const char* what) {
        unsigned char buf[2];
        read(buf, 2, what);
        return static_cast<uint16_t>(buf[0] | (buf[1] << 8));
    }
    uint32_t read_u32(const char* what) {
        unsigned char buf[4];
        read(buf, 4, what);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf[i]) << (8 * i);
        return v;
    }
    float read_f32(const char* what) {
        uint32_t bits = read_u32(what);
        float v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }
};

}  // namespace

void write_dataset(const Dataset& ds, const std::string& path) {
    if (!ds.has_task_label && !ds.has_nuisance_label)
        throw Error("dataset must carry at least one label kind");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write("PLD1", 4);
    put_u32(out, static_cast<uint32_t>(ds.size()));
    put_u32(out, static_cast<uint32_t>(ds.feat_dim));
    out.put(ds.has_task_label ? 1 : 0);
    out.put(ds.has_nuisance_label ? 1 : 0);
    put_u16(out, ds.task_classes);
    put_u16(out, ds.nuis_classes);
    for (size_t i = 0; i < ds.size(); ++i) {
        const float* x = ds.row(i);
        for (size_t d = 0; d < ds.feat_dim; ++d) put_f32(out, x[d]);
        if (ds.has_task_label) put_u16(out, ds.y[i]);
        if (ds.has_nuisance_label) put_u16(out, ds.y_tir[i]);
    }
    if (!ds.latents.empty()) {
        if (ds.latents.size() != ds.size() * 2) throw Error("latent block must hold 2 factors per sample");
        out.write("LAT1", 4);
        for (float v : ds.latents) put_f32(out, v);
    }
    out.flush();
    if (!out) throw IoError("write failed for " + path);
}

Dataset read_dataset(const std::string& path) {
    DataReader r(path);
    char magic[4];
    r.read(magic, 4, "magic");
    if (std::memcmp(magic, "PLD1", 4) != 0) throw FormatError("bad dataset magic", 0);
    Dataset ds;
    uint32_t count = r.read_u32("sample count");
    uint32_t dim = r.read_u32("feature dim");
    unsigned char flags[2];
    r.read(flags, 2, "label flags");
    if (flags[0] > 1 || flags[1] > 1) throw FormatError("label flag must be 0 or 1", r.offset - 2);
    ds.has_task_label = flags[0] == 1;
    ds.has_nuisance_label = flags[1] == 1;
    if (!ds.has_task_label && !ds.has_nuisance_label)
        throw FormatError("dataset carries no labels", r.offset - 2);
    ds.task_classes = r.read_u16("task class count");
    ds.nuis_classes = r.read_u16("nuisance class count");
    if (dim == 0) throw FormatError("zero feature dim", 8);
    if (ds.has_task_label && ds.task_classes == 0)
        throw FormatError("task labels present but class count is 0", r.offset - 4);
    if (ds.has_nuisance_label && ds.nuis_classes == 0)
        throw FormatError("nuisance labels present but class count is 0", r.offset - 2);
    ds.feat_dim = dim;
    ds.features.resize(static_cast<size_t>(count) * dim);
    if (ds.has_task_label) ds.y.resize(count);
    if (ds.has_nuisance_label) ds.y_tir.resize(count);
    for (uint32_t i = 0; i < count; ++i) {
        for (uint32_t d = 0; d < dim; ++d) {
            size_t at = r.offset;
            float v = r.read_f32("features");
            if (!std::isfinite(v)) throw FormatError("non-finite feature value", at);
            ds.features[static_cast<size_t>(i) * dim + d] = v;
        }
        if (ds.has_task_label) {
            size_t at = r.offset;
            ds.y[i] = r.read_u16("task label");
            if (ds.y[i] >= ds.task_classes) throw FormatError("task label out of range", at);
        }
        if (ds.has_nuisance_label) {
            size_t at = r.offset;
            ds.y_tir[i] = r.read_u16("nuisance label");
            if (ds.y_tir[i] >= ds.nuis_classes)
                throw FormatError("nuisance label out of range", at);
        }
    }
    char tag[4];
    if (r.try_read(tag, 4)) {
        if (std::memcmp(tag, "LAT1", 4) != 0)
            throw FormatError("unknown trailing block tag", r.offset - 4);
        ds.latents.resize(static_cast<size_t>(count) * 2);
        for (size_t i = 0; i < ds.latents.size(); ++i) ds.latents[i] = r.read_f32("latents");
        char extra;
        r.in.read(&extra, 1);
        if (r.in.gcount() != 0) throw FormatError("trailing bytes after latent block", r.offset);
    }
    return ds;
}

namespace {

Batch gather(const Dataset& ds, const std::vector<uint32_t>& idx, bool task_labels) {
    Batch batch{Tensor(idx.size(), ds.feat_dim), {}};
    batch.labels.reserve(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
        const float* x = ds.row(idx[i]);
        for (size_t d = 0; d < ds.feat_dim; ++d) batch.x.at(i, d) = x[d];
        batch.labels.push_back(task_labels ? ds.y[idx[i]] : ds.y_tir[idx[i]]);
    }
    return batch;
}

}  // namespace

Batch sample_batch_A(const Dataset& src, uint16_t y1, size_t m, Rng& rng) {
    if (!src.has_nuisance_label) throw Error("batch A needs nuisance labels");
    if (m == 0) throw Error("batch size must be >= 1");
    std::vector<uint32_t> members;
    for (size_t i = 0; i < src.size(); ++i)
        if (src.y_tir[i] == y1) members.push_back(static_cast<uint32_t>(i));
    if (members.empty())
        throw Error("nuisance class " + std::to_string(y1) + " has no samples");
    std::vector<uint32_t> idx(m);
    for (size_t i = 0; i < m; ++i) idx[i] = members[rng.next_u64(members.size())];
    return gather(src, idx, false);
}

Batch sample_batch_B(const Dataset& src, size_t m, Rng& rng) {
    if (!src.has_nuisance_label) throw Error("batch B needs nuisance labels");
    if (src.size() == 0) throw Error("cannot sample from an empty dataset");
    if (m == 0) throw Error("batch size must be >= 1");
    std::vector<uint32_t> idx(m);
    for (size_t i = 0; i < m; ++i) idx[i] = static_cast<uint32_t>(rng.next_u64(src.size()));
    return gather(src, idx, false);
}

Batch sample_batch_C(const Dataset& tgt, size_t m, Rng& rng) {
    if (!tgt.has_task_label) throw Error("batch C needs task labels");
    if (tgt.size() == 0) throw Error("cannot sample from an empty dataset");
    if (m == 0) throw Error("batch size must be >= 1");
    std::vector<uint32_t> idx(m);
    for (size_t i = 0; i < m; ++i) idx[i] = static_cast<uint32_t>(rng.next_u64(tgt.size()));
    return gather(tgt, idx, true);
}

uint16_t most_frequent_nuisance(const Dataset& src) {
    if (!src.has_nuisance_label || src.size() == 0)
        throw Error("most_frequent_nuisance needs a nuisance-labeled dataset");
    std::vector<size_t> counts(src.nuis_classes, 0);
    for (uint16_t label : src.y_tir) ++counts[label];
    size_t best = 0;
    for (size_t k = 1; k < counts.size(); ++k)
        if (counts[k] > counts[best]) best = k;
    return static_cast<uint16_t>(best);
}

Tensor dataset_features(const Dataset& ds) {
    Tensor out(ds.size(), ds.feat_dim);
    for (size_t i = 0; i < ds.size(); ++i) {
        const float* x = ds.row(i);
        for (size_t d = 0; d < ds.feat_dim; ++d) out.at(i, d) = x[d];
    }
    return out;
}

Tensor dataset_features(const Dataset& ds, const std::vector<uint32_t>& rows) {
    Tensor out(rows.size(), ds.feat_dim);
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= ds.size()) throw Error("dataset row index out of range");
        const float* x = ds.row(rows[i]);
        for (size_t d = 0; d < ds.feat_dim; ++d) out.at(i, d) = x[d];
    }
    return out;
}

Dataset dataset_subset(const Dataset& ds, const std::vector<uint32_t>& rows) {
    Dataset out;
    out.feat_dim = ds.feat_dim;
    out.has_task_label = ds.has_task_label;
    out.has_nuisance_label = ds.has_nuisance_label;
    out.task_classes = ds.task_classes;
    out.nuis_classes = ds.nuis_classes;
    out.features.reserve(rows.size() * ds.feat_dim);
    for (uint32_t r : rows) {
        if (r >= ds.size()) throw Error("dataset row index out of range");
        const float* x = ds.row(r);
        out.features.insert(out.features.end(), x, x + ds.feat_dim);
        if (ds.has_task_label) out.y.push_back(ds.y[r]);
        if (ds.has_nuisance_label) out.y_tir.push_back(ds.y_tir[r]);
        if (!ds.latents.empty()) {
            out.latents.push_back(ds.latents[r * 2]);
            out.latents.push_back(ds.latents[r * 2 + 1]);
        }
    }
    return out;
}

}  // namespace pl

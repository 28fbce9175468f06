#include "meagraph/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "meagraph/errors.hpp"
#include "meagraph/rng.hpp"
#include "meagraph/textio.hpp"

namespace meagraph {

namespace {

constexpr std::size_t kFixedColumns = 6; // structure_id,atom_index,group,fx,fy,fz

void validate_field_text(std::string_view value, const char* what) {
    if (value.find(',') != std::string_view::npos ||
        value.find('\n') != std::string_view::npos) {
        throw DataError(std::string(what) + " may not contain commas or newlines: '" +
                        std::string(value) + "'");
    }
}

std::string header_line(std::size_t dim) {
    std::string h = "structure_id,atom_index,group,fx,fy,fz";
    for (std::size_t d = 0; d < dim; ++d) {
        h += ",d" + std::to_string(d);
    }
    return h;
}

void append_record_line(std::string& out, const AtomRecord& r) {
    out += r.structure_id;
    out += ',';
    out += std::to_string(r.atom_index);
    out += ',';
    out += r.group.empty() ? "unlabeled" : r.group;
    for (double f : r.force) {
        out += ',';
        out += format_double(f);
    }
    for (double d : r.features) {
        out += ',';
        out += format_double(d);
    }
    out += '\n';
}

// Serializes the hidden linear force map for the synthetic generators.
std::string encode_weights(const std::vector<double>& w) {
    std::string s;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i) s += ';';
        s += format_double(w[i]);
    }
    return s;
}

std::vector<double> decode_weights(const std::string& s) {
    std::vector<double> w;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t pos = s.find(';', start);
        const std::string_view field{s.data() + start,
                                     (pos == std::string::npos ? s.size() : pos) - start};
        w.push_back(parse_double(field));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return w;
}

void apply_hidden_force(AtomRecord& r, const std::vector<double>& w, double force_noise,
                        Rng& rng) {
    double y = 0.0;
    for (std::size_t d = 0; d < r.features.size(); ++d) y += r.features[d] * w[d];
    for (auto& f : r.force) {
        f = y + (force_noise > 0.0 ? force_noise * rng.normal() : 0.0);
    }
}

} // namespace

Matrix FeatureDataset::feature_matrix() const {
    Matrix x(records.size(), feature_dim);
    for (std::size_t i = 0; i < records.size(); ++i) {
        for (std::size_t d = 0; d < feature_dim; ++d) x(i, d) = records[i].features[d];
    }
    return x;
}

std::vector<std::string> FeatureDataset::group_labels() const {
    std::vector<std::string> g;
    g.reserve(records.size());
    for (const auto& r : records) g.push_back(r.group.empty() ? "unlabeled" : r.group);
    return g;
}

std::vector<std::string> FeatureDataset::group_set() const {
    std::set<std::string> s;
    for (const auto& r : records) s.insert(r.group.empty() ? "unlabeled" : r.group);
    return {s.begin(), s.end()};
}

std::string FeatureDataset::canonical_serialization() const {
    std::string out;
    for (const auto& [k, v] : metadata) {
        out += '#';
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    out += header_line(feature_dim);
    out += '\n';
    for (const auto& r : records) append_record_line(out, r);
    return out;
}

std::string FeatureDataset::content_hash() const { return sha256_hex(canonical_serialization()); }

void scan_dataset(const std::string& path,
                  const std::function<void(const AtomRecord&, std::size_t)>& on_record,
                  std::map<std::string, std::string>* metadata_out,
                  std::size_t* feature_dim_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset: " + path);

    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::size_t dim = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (header_seen) {
                throw DataError("line " + std::to_string(line_no) +
                                ": metadata lines must precede the header");
            }
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos) {
                throw DataError("line " + std::to_string(line_no) + ": metadata needs key=value");
            }
            if (metadata_out) {
                (*metadata_out)[line.substr(1, eq - 1)] = line.substr(eq + 1);
            }
            continue;
        }
        const auto fields = split_csv_line(line);
        if (!header_seen) {
            if (fields.size() < kFixedColumns) {
                throw DataError("line " + std::to_string(line_no) +
                                ": header needs at least the 6 fixed columns");
            }
            static const char* expect[kFixedColumns] = {"structure_id", "atom_index", "group",
                                                        "fx",           "fy",         "fz"};
            for (std::size_t c = 0; c < kFixedColumns; ++c) {
                if (fields[c] != expect[c]) {
                    throw DataError("line " + std::to_string(line_no) + ": column " +
                                    std::to_string(c) + " must be '" + expect[c] + "'");
                }
            }
            dim = fields.size() - kFixedColumns;
            for (std::size_t d = 0; d < dim; ++d) {
                if (fields[kFixedColumns + d] != "d" + std::to_string(d)) {
                    throw DataError("line " + std::to_string(line_no) +
                                    ": descriptor columns must be d0..d" + std::to_string(dim - 1));
                }
            }
            if (feature_dim_out) *feature_dim_out = dim;
            header_seen = true;
            continue;
        }
        if (fields.size() != kFixedColumns + dim) {
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(kFixedColumns + dim) + " fields, got " +
                            std::to_string(fields.size()));
        }
        AtomRecord r;
        r.structure_id = std::string(fields[0]);
        try {
            r.atom_index = static_cast<std::size_t>(std::stoull(std::string(fields[1])));
            r.group = std::string(fields[2]);
            if (r.group.empty()) r.group = "unlabeled";
            for (std::size_t c = 0; c < 3; ++c) r.force[c] = parse_double(fields[3 + c]);
            r.features.resize(dim);
            for (std::size_t d = 0; d < dim; ++d) {
                r.features[d] = parse_double(fields[kFixedColumns + d]);
            }
        } catch (const std::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
        for (double f : r.force) {
            if (!std::isfinite(f)) {
                throw DataError("line " + std::to_string(line_no) + ": non-finite force value");
            }
        }
        for (double d : r.features) {
            if (!std::isfinite(d)) {
                throw DataError("line " + std::to_string(line_no) + ": non-finite feature value");
            }
        }
        on_record(r, line_no);
    }
    if (!header_seen) {
        throw DataError("dataset has no header: " + path);
    }
}

FeatureDataset load_dataset(const std::string& path) {
    FeatureDataset ds;
    scan_dataset(
        path, [&ds](const AtomRecord& r, std::size_t) { ds.records.push_back(r); },
        &ds.metadata, &ds.feature_dim);
    if (ds.records.empty()) {
        throw DataError("dataset has no records: " + path);
    }
    return ds;
}

void save_dataset(const FeatureDataset& ds, const std::string& path) {
    for (const auto& [k, v] : ds.metadata) {
        validate_field_text(k, "metadata key");
        if (v.find('\n') != std::string::npos) {
            throw DataError("metadata values may not contain newlines");
        }
    }
    for (const auto& r : ds.records) {
        validate_field_text(r.structure_id, "structure_id");
        validate_field_text(r.group, "group");
        if (r.features.size() != ds.feature_dim) {
            throw ShapeError("save_dataset: record feature width differs from feature_dim");
        }
    }
    write_text_file(path, ds.canonical_serialization());
}

FeatureDataset synth_blobs_sized(const std::vector<std::size_t>& sizes, std::size_t dim,
                                 double separation, double noise_sigma, std::uint64_t seed,
                                 double force_noise) {
    if (sizes.empty() || dim < 1) throw ConfigError("synth_blobs: need k, D >= 1");
    for (std::size_t s : sizes) {
        if (s < 1) throw ConfigError("synth_blobs: blob sizes must be >= 1");
    }
    if (separation <= 0.0) throw ConfigError("synth_blobs: separation must be > 0");

    const std::size_t k = sizes.size();
    // Centroids sep*(c+1) along axis (c mod D): any two differ by at least
    // `separation` along some axis, so pairwise distances are >= separation.
    std::vector<std::vector<double>> centroids(k, std::vector<double>(dim, 0.0));
    for (std::size_t c = 0; c < k; ++c) {
        centroids[c][c % dim] = separation * static_cast<double>(c + 1);
    }

    Rng map_rng(derive_seed(seed, "synth.hidden_map"));
    std::vector<double> hidden(dim);
    for (auto& w : hidden) w = map_rng.normal();

    Rng rng(derive_seed(seed, "synth.blobs"));
    FeatureDataset ds;
    ds.feature_dim = dim;
    ds.metadata["generator"] = "blobs";
    ds.metadata["hidden_force_map"] = encode_weights(hidden);
    if (force_noise > 0.0) ds.metadata["force_noise"] = format_double(force_noise);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < sizes[c]; ++i) {
            AtomRecord r;
            r.structure_id = "blob" + std::to_string(c);
            r.atom_index = i;
            r.group = "g" + std::to_string(c);
            r.features.resize(dim);
            for (std::size_t d = 0; d < dim; ++d) {
                r.features[d] = centroids[c][d] + noise_sigma * rng.normal();
            }
            apply_hidden_force(r, hidden, force_noise, rng);
            ds.records.push_back(std::move(r));
        }
    }
    return ds;
}

FeatureDataset synth_blobs(std::size_t n_clusters, std::size_t per_cluster, std::size_t dim,
                           double separation, double noise_sigma, std::uint64_t seed,
                           double force_noise) {
    if (n_clusters < 1 || per_cluster < 1) throw ConfigError("synth_blobs: need k, n >= 1");
    return synth_blobs_sized(std::vector<std::size_t>(n_clusters, per_cluster), dim, separation,
                             noise_sigma, seed, force_noise);
}

FeatureDataset synth_redundant(const FeatureDataset& base, std::size_t factor, double jitter,
                               std::uint64_t seed) {
    if (factor < 1) throw ConfigError("synth_redundant: factor must be >= 1");
    std::vector<double> hidden;
    auto it = base.metadata.find("hidden_force_map");
    if (it != base.metadata.end()) hidden = decode_weights(it->second);
    double force_noise = 0.0;
    if (auto fn = base.metadata.find("force_noise"); fn != base.metadata.end()) {
        force_noise = parse_double(fn->second);
    }

    Rng rng(derive_seed(seed, "synth.redundant"));
    FeatureDataset ds;
    ds.feature_dim = base.feature_dim;
    ds.metadata = base.metadata;
    ds.metadata["generator"] = "redundant";
    ds.metadata["duplication_factor"] = std::to_string(factor);
    for (const auto& src : base.records) {
        for (std::size_t rep = 0; rep < factor; ++rep) {
            AtomRecord r = src;
            r.atom_index = ds.records.size();
            if (jitter > 0.0) {
                for (auto& f : r.features) f += jitter * rng.normal();
            }
            if (!hidden.empty()) {
                apply_hidden_force(r, hidden, force_noise, rng);
            }
            ds.records.push_back(std::move(r));
        }
    }
    return ds;
}

} // namespace meagraph

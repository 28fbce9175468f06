#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "meagraph/matrix.hpp"

namespace meagraph {

struct AtomRecord {
    std::string structure_id;
    std::size_t atom_index = 0;
    std::string group;
    std::array<double, 3> force{0.0, 0.0, 0.0};
    std::vector<double> features;
};

// Per-atom descriptor rows with force labels. Canonical file format:
// optional "#key=value" metadata lines, then the header
// structure_id,atom_index,group,fx,fy,fz,d0,...,d{D-1} and one row per
// atom; doubles use shortest round-trip notation, lines end in \n.
struct FeatureDataset {
    std::vector<AtomRecord> records;
    std::size_t feature_dim = 0;
    std::map<std::string, std::string> metadata;

    std::size_t size() const { return records.size(); }

    Matrix feature_matrix() const;
    std::vector<std::string> group_labels() const;
    // Sorted unique group names.
    std::vector<std::string> group_set() const;

    std::string canonical_serialization() const;
    // SHA-256 of the canonical serialization.
    std::string content_hash() const;
};

FeatureDataset load_dataset(const std::string& path);
void save_dataset(const FeatureDataset& ds, const std::string& path);

// Streaming scan that never materializes the dataset; load_dataset is
// built on top of it and the two agree by construction.
void scan_dataset(const std::string& path,
                  const std::function<void(const AtomRecord&, std::size_t row_number)>& on_record,
                  std::map<std::string, std::string>* metadata_out = nullptr,
                  std::size_t* feature_dim_out = nullptr);

// Isotropic Gaussian blobs with pairwise centroid distance >= separation.
// Forces come from a hidden linear map (stored in metadata) applied to the
// features, identical across the three components, plus optional noise.
FeatureDataset synth_blobs(std::size_t n_clusters, std::size_t per_cluster, std::size_t dim,
                           double separation, double noise_sigma, std::uint64_t seed,
                           double force_noise = 0.0);

// Like synth_blobs but with explicit per-blob sizes (first sizes.size()
// groups); used to construct datasets with under-sampled clusters.
FeatureDataset synth_blobs_sized(const std::vector<std::size_t>& sizes, std::size_t dim,
                                 double separation, double noise_sigma, std::uint64_t seed,
                                 double force_noise = 0.0);

// Replicates every atom `factor` times with Gaussian jitter; force labels
// are recomputed from the hidden linear map in the base metadata when
// present, otherwise copied from the source atom.
FeatureDataset synth_redundant(const FeatureDataset& base, std::size_t factor, double jitter,
                               std::uint64_t seed);

} // namespace meagraph

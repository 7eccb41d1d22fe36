#ifndef EGOSOCIAL_CLUSTER_HPP
#define EGOSOCIAL_CLUSTER_HPP

#include <algorithm>
#include <cmath>
#include <compare>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "egosocial/error.hpp"
#include "egosocial/types.hpp"

namespace egosocial {

struct FaceSetId {
  std::string sequence_id;
  TrackId track_id = 0;

  auto operator<=>(const FaceSetId&) const = default;
  bool operator==(const FaceSetId&) const = default;

  std::string str() const { return sequence_id + "#" + std::to_string(track_id); }
};

/// The face examples of one person within one event; rows are unit vectors.
struct FaceSet {
  FaceSetId id;
  Matrix embeddings;
  std::optional<std::string> person;

  Eigen::Index size() const { return embeddings.rows(); }
};

inline void validate_face_set(const FaceSet& set) {
  require(set.size() >= 1, ErrorCode::EmptyInput, set.id.str() + ": face-set has no embeddings");
  for (Eigen::Index r = 0; r < set.size(); ++r) {
    require(std::abs(set.embeddings.row(r).norm() - 1.0) <= kDistributionTolerance, ErrorCode::InvalidArgument,
            set.id.str() + ": embedding is not unit norm");
  }
}

/// Exact median; even counts average the two middle values.
inline double median(std::vector<double> values) {
  require(!values.empty(), ErrorCode::EmptyInput, "median of empty set");
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

/// |median of within-R cosine similarities (distinct pairs) - median of R x T
/// similarities|. A single-example R has within-median 1.
inline double faceset_dissimilarity(const FaceSet& reference, const FaceSet& target) {
  require(reference.embeddings.cols() == target.embeddings.cols(), ErrorCode::DimensionMismatch,
          reference.id.str() + " vs " + target.id.str() + ": embedding dimensions differ");
  require(reference.size() >= 1 && target.size() >= 1, ErrorCode::EmptyInput, "empty face-set");
  double mu_reference = 1.0;
  if (reference.size() > 1) {
    const Matrix gram = reference.embeddings * reference.embeddings.transpose();
    std::vector<double> within;
    within.reserve(static_cast<std::size_t>(gram.rows() * (gram.rows() - 1) / 2));
    for (Eigen::Index i = 0; i < gram.rows(); ++i)
      for (Eigen::Index j = i + 1; j < gram.cols(); ++j) within.push_back(gram(i, j));
    mu_reference = median(std::move(within));
  }
  const Matrix cross = reference.embeddings * target.embeddings.transpose();
  const double mu_target = median(std::vector<double>(cross.data(), cross.data() + cross.size()));
  return std::abs(mu_reference - mu_target);
}

inline double symmetrized_dissimilarity(const FaceSet& a, const FaceSet& b) {
  return 0.5 * (faceset_dissimilarity(a, b) + faceset_dissimilarity(b, a));
}

/// Median symmetrized dissimilarity over all pairs of face-sets that share a
/// person label.
inline double calibrate_cutoff(std::span<const FaceSet> sets) {
  std::vector<double> same;
  for (std::size_t i = 0; i < sets.size(); ++i)
    for (std::size_t j = i + 1; j < sets.size(); ++j)
      if (sets[i].person && sets[j].person && *sets[i].person == *sets[j].person)
        same.push_back(symmetrized_dissimilarity(sets[i], sets[j]));
  if (same.empty()) throw Error(ErrorCode::InsufficientData, "no pair of face-sets shares a person label");
  return median(std::move(same));
}

enum class Linkage { Single, Average, Complete };

inline constexpr std::string_view to_string(Linkage l) {
  switch (l) {
    case Linkage::Single: return "single";
    case Linkage::Average: return "average";
    case Linkage::Complete: return "complete";
  }
  return "?";
}

inline Linkage parse_linkage(std::string_view text) {
  if (text == "single") return Linkage::Single;
  if (text == "average") return Linkage::Average;
  if (text == "complete") return Linkage::Complete;
  throw Error(ErrorCode::InvalidArgument, "unknown linkage '" + std::string(text) + "'");
}

struct Merge {
  std::size_t left = 0;   // canonical index of the first member of each side
  std::size_t right = 0;
  double height = 0.0;
  std::size_t size = 0;   // members after the merge
};

struct ClusterResult {
  std::vector<std::vector<FaceSetId>> clusters;  // each sorted; ordered by first member
  double cutoff = 0.0;
  Linkage linkage = Linkage::Single;
  std::vector<Merge> dendrogram;

  std::map<FaceSetId, std::size_t> assignment() const {
    std::map<FaceSetId, std::size_t> out;
    for (std::size_t c = 0; c < clusters.size(); ++c)
      for (const auto& id : clusters[c]) out[id] = c;
    return out;
  }
};

inline Matrix dissimilarity_matrix(std::span<const FaceSet> sets) {
  const auto n = static_cast<Eigen::Index>(sets.size());
  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      d(i, j) = d(j, i) = symmetrized_dissimilarity(sets[static_cast<std::size_t>(i)], sets[static_cast<std::size_t>(j)]);
  return d;
}

/// Agglomerative clustering on the symmetrized dissimilarity. Inputs are put
/// in canonical id order first; merging stops once the closest pair of
/// clusters is farther apart than `cutoff`. Ties go to the lexicographically
/// smallest pair.
inline ClusterResult agglomerate(std::span<const FaceSet> input, double cutoff, Linkage linkage = Linkage::Single) {
  std::vector<const FaceSet*> sets;
  for (const auto& s : input) {
    validate_face_set(s);
    sets.push_back(&s);
  }
  std::sort(sets.begin(), sets.end(), [](const FaceSet* a, const FaceSet* b) { return a->id < b->id; });
  for (std::size_t k = 1; k < sets.size(); ++k)
    require(!(sets[k]->id == sets[k - 1]->id), ErrorCode::InvalidArgument, "duplicate face-set " + sets[k]->id.str());

  const std::size_t n = sets.size();
  Matrix dist = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          dist(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = symmetrized_dissimilarity(*sets[i], *sets[j]);

  // Slot i holds the cluster whose smallest member is i.
  std::vector<std::vector<std::size_t>> members(n);
  std::vector<bool> active(n, true);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};

  ClusterResult result;
  result.cutoff = cutoff;
  result.linkage = linkage;
  for (std::size_t remaining = n; remaining > 1; --remaining) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        const double d = dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    if (best > cutoff) break;

    const double ni = static_cast<double>(members[bi].size());
    const double nj = static_cast<double>(members[bj].size());
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const double dik = dist(static_cast<Eigen::Index>(bi), static_cast<Eigen::Index>(k));
      const double djk = dist(static_cast<Eigen::Index>(bj), static_cast<Eigen::Index>(k));
      double merged = 0.0;
      switch (linkage) {
        case Linkage::Single: merged = std::min(dik, djk); break;
        case Linkage::Complete: merged = std::max(dik, djk); break;
        case Linkage::Average: merged = (ni * dik + nj * djk) / (ni + nj); break;
      }
      dist(static_cast<Eigen::Index>(bi), static_cast<Eigen::Index>(k)) = merged;
      dist(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(bi)) = merged;
    }
    members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
    std::sort(members[bi].begin(), members[bi].end());
    members[bj].clear();
    active[bj] = false;
    result.dendrogram.push_back({bi, bj, best, members[bi].size()});
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!active[i]) continue;
    std::vector<FaceSetId> cluster;
    for (auto m : members[i]) cluster.push_back(sets[m]->id);
    result.clusters.push_back(std::move(cluster));
  }
  return result;
}

/// One face-set per (sequence, track) that carries embeddings. Ground-truth
/// person labels are attached when the dataset has them.
inline std::vector<FaceSet> face_sets_from_sequences(std::span<const SequenceRecord> sequences,
                                                     bool interacting_only = false) {
  std::vector<FaceSet> out;
  for (const auto& seq : sequences) {
    std::map<TrackId, std::vector<const std::vector<double>*>> by_track;
    for (const auto& frame : seq.frames)
      for (const auto& face : frame.faces)
        if (!face.embedding.empty()) by_track[face.track_id].push_back(&face.embedding);
    for (const auto& [track, rows] : by_track) {
      if (interacting_only) {
        if (!seq.labels) continue;
        auto it = seq.labels->interacting.find(track);
        if (it == seq.labels->interacting.end() || !it->second) continue;
      }
      FaceSet set;
      set.id = {seq.sequence_id, track};
      set.embeddings.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front()->size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        require(rows[r]->size() == rows.front()->size(), ErrorCode::DimensionMismatch, set.id.str() + ": embedding sizes differ");
        for (std::size_t k = 0; k < rows[r]->size(); ++k)
          set.embeddings(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = (*rows[r])[k];
      }
      if (seq.labels) {
        auto it = seq.labels->persons.find(track);
        if (it != seq.labels->persons.end()) set.person = it->second;
      }
      out.push_back(std::move(set));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reporting

struct SequenceOutcome {
  std::optional<bool> interacting;
  std::optional<Category> category;
};

struct ClusterMember {
  FaceSetId id;
  std::size_t faces = 0;
  std::optional<bool> interacting;
  std::optional<Category> category;
};

struct PersonReport {
  std::size_t cluster = 0;
  std::vector<ClusterMember> members;
  std::size_t cardinality = 0;  // face-sets in the cluster
  std::size_t face_count = 0;
  std::size_t sequence_count = 0;
  std::size_t interacting_count = 0;
  std::size_t formal_count = 0;
  std::size_t informal_count = 0;
};

/// Per-cluster event list. An empty outcome map yields a report without
/// label fields; a non-empty map must cover every member sequence.
inline std::vector<PersonReport> cluster_report(const ClusterResult& result, std::span<const FaceSet> sets,
                                                const std::map<std::string, SequenceOutcome>& outcomes) {
  std::map<FaceSetId, const FaceSet*> by_id;
  for (const auto& s : sets) by_id[s.id] = &s;
  std::vector<PersonReport> out;
  for (std::size_t c = 0; c < result.clusters.size(); ++c) {
    PersonReport report;
    report.cluster = c;
    std::vector<std::string> sequences;
    for (const auto& id : result.clusters[c]) {
      ClusterMember member;
      member.id = id;
      auto set = by_id.find(id);
      if (set == by_id.end()) throw Error(ErrorCode::UnknownReference, "face-set " + id.str() + " not supplied");
      member.faces = static_cast<std::size_t>(set->second->size());
      if (!outcomes.empty()) {
        auto it = outcomes.find(id.sequence_id);
        if (it == outcomes.end()) throw Error(ErrorCode::UnknownReference, "no labels for sequence " + id.sequence_id);
        member.interacting = it->second.interacting;
        member.category = it->second.category;
        if (member.interacting.value_or(false)) ++report.interacting_count;
        if (member.category == Category::Formal) ++report.formal_count;
        if (member.category == Category::Informal) ++report.informal_count;
      }
      report.face_count += member.faces;
      sequences.push_back(id.sequence_id);
      report.members.push_back(std::move(member));
    }
    std::sort(sequences.begin(), sequences.end());
    report.sequence_count = static_cast<std::size_t>(std::unique(sequences.begin(), sequences.end()) - sequences.begin());
    report.cardinality = result.clusters[c].size();
    out.push_back(std::move(report));
  }
  return out;
}

/// Pairwise precision/recall/F-score of a clustering against person labels.
struct PairScore {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
};

inline PairScore pairwise_score(const ClusterResult& result, std::span<const FaceSet> sets) {
  const auto assign = result.assignment();
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = i + 1; j < sets.size(); ++j) {
      const bool same_cluster = assign.at(sets[i].id) == assign.at(sets[j].id);
      const bool same_person = sets[i].person && sets[j].person && *sets[i].person == *sets[j].person;
      if (same_cluster && same_person) ++tp;
      else if (same_cluster) ++fp;
      else if (same_person) ++fn;
    }
  }
  PairScore s;
  s.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  s.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  s.f_score = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

}  // namespace egosocial

#endif

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace lemcpd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Timestamp = std::int64_t;

enum class Directedness { kDirected, kUndirected };

/// One timestamped weighted graph stored as a dense n x n weight matrix.
/// Entry (i, j) is the weight of the edge i -> j; absent edges are 0.
/// The weight matrix is shared between copies and never mutated.
class GraphSnapshot {
 public:
  GraphSnapshot(Timestamp timestamp, Matrix weights,
                Directedness directedness = Directedness::kDirected);

  Timestamp timestamp() const { return timestamp_; }
  std::size_t size() const { return static_cast<std::size_t>(weights_->rows()); }
  const Matrix& weights() const { return *weights_; }
  Directedness directedness() const { return directedness_; }
  bool undirected() const { return directedness_ == Directedness::kUndirected; }

  /// Same weights under a different timestamp; shares storage.
  GraphSnapshot with_timestamp(Timestamp t) const;

 private:
  Timestamp timestamp_;
  std::shared_ptr<const Matrix> weights_;
  Directedness directedness_;
};

/// Returns every violated snapshot invariant; empty means valid.
std::vector<std::string> validate(const GraphSnapshot& snap);

/// Throws DataError listing the violations when `snap` is invalid.
void require_valid(const GraphSnapshot& snap);

/// Ordered snapshots with a shared node count and contiguous, strictly
/// increasing timestamps.
class GraphSequence {
 public:
  GraphSequence() = default;
  explicit GraphSequence(std::vector<GraphSnapshot> snapshots);

  /// Builds a sequence with timestamps first, first+1, ...
  static GraphSequence from_matrices(std::vector<Matrix> weights, Timestamp first = 0,
                                     Directedness directedness = Directedness::kDirected);

  std::size_t length() const { return snapshots_.size(); }
  bool empty() const { return snapshots_.empty(); }
  std::size_t nodes() const { return nodes_; }
  Timestamp first_timestamp() const;
  Timestamp last_timestamp() const;
  bool contains(Timestamp t) const;

  const GraphSnapshot& operator[](std::size_t i) const { return snapshots_[i]; }
  const GraphSnapshot& at_time(Timestamp t) const;
  const std::vector<GraphSnapshot>& snapshots() const { return snapshots_; }

  auto begin() const { return snapshots_.begin(); }
  auto end() const { return snapshots_.end(); }

  /// True when every snapshot has a symmetric weight matrix.
  bool all_symmetric() const;

 private:
  std::vector<GraphSnapshot> snapshots_;
  std::size_t nodes_ = 0;
};

/// Contiguous sub-sequence of `size` snapshots ending at timestamp `end`.
/// Snapshot storage is shared with `seq`.
GraphSequence window(const GraphSequence& seq, Timestamp end, std::size_t size);

/// ||W_a - W_b||_F.
double frobenius_distance(const GraphSnapshot& a, const GraphSnapshot& b);

struct LabelSet {
  std::set<Timestamp> change_points;
  std::set<Timestamp> events;
};

enum class SequenceFormat { kEdgeListFile, kEdgeListDirectory };

struct LoadOptions {
  /// Declared node count. When set, node ids must be integers in [0, nodes).
  std::optional<std::size_t> nodes;
  /// Overrides the `# directed` header; defaults to directed when absent.
  std::optional<Directedness> directedness;
};

/// Reads a sequence in the edge-list text format.
///
/// Records are `<t> <src> <dst> <weight>`; `#` starts a comment. Three
/// header comments are recognised: `# nodes <n>`, `# directed <true|false>`
/// and `# timestamps <first> <last>`. Without `# nodes`, node ids are
/// arbitrary strings mapped to 0..n-1 in sorted order (numeric order when
/// every id is a non-negative integer).
GraphSequence load_sequence(const std::filesystem::path& path, SequenceFormat format,
                            const LoadOptions& options = {});

/// Picks the directory format for directories, single-file otherwise.
GraphSequence load_sequence(const std::filesystem::path& path, const LoadOptions& options = {});

/// Writes `seq` as a single edge-list file with header comments so that
/// load_sequence restores node count, directedness and timestamp range.
void save_sequence(const GraphSequence& seq, const std::filesystem::path& path);

/// Writes one `t<index>.edges` file per snapshot into `dir`.
void save_sequence_directory(const GraphSequence& seq, const std::filesystem::path& dir);

LabelSet load_labels(const std::filesystem::path& path);
void save_labels(const LabelSet& labels, const std::filesystem::path& path);

/// Formats a weight with 12 significant digits, the text precision of the
/// edge-list format.
std::string format_weight(double w);

}  // namespace lemcpd

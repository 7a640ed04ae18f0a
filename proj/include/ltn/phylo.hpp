#ifndef LTN_PHYLO_HPP
#define LTN_PHYLO_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ltn {

using MatrixXi64 = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Rooted tree as parsed, possibly multifurcating. Interior nodes carry an
/// empty label slot (Newick interior labels and branch lengths are discarded).
struct RawTree {
  struct Node {
    std::string label;          // nonempty for leaves
    std::vector<int> children;  // empty for leaves
  };
  std::vector<Node> nodes;
  int root = -1;
};

/// Rooted full binary tree over K labeled leaves, immutable once built.
///
/// Interior nodes are indexed by pre-order rank (root = 0), so for any
/// interior node a, all interior nodes of its subtree have indices > a and
/// its left subtree's interior indices precede its right subtree's. Every
/// d-vector in the library (log-odds, means, precision rows) uses this
/// ordering. Leaves are indexed by first appearance in the traversal, which
/// matches textual order for parsed Newick.
class PhyloTree {
 public:
  struct Child {
    bool leaf = false;
    int idx = -1;
  };

  /// Assigns indices from a binary RawTree; throws ValidationError on
  /// multifurcations, single-child nodes, duplicate or empty leaf labels,
  /// or fewer than 2 leaves.
  static PhyloTree build(const RawTree& raw);

  int leaf_count() const { return K_; }
  int interior_count() const { return d_; }

  Child left(int a) const { return left_[a]; }
  Child right(int a) const { return right_[a]; }
  const std::vector<std::string>& leaf_labels() const { return leaf_labels_; }

  int depth(int a) const { return depth_[a]; }
  int leaves_under(Child c) const { return c.leaf ? 1 : leaves_under_[c.idx]; }
  int parent(int a) const { return parent_[a]; }
  int leaf_parent(int leaf) const { return leaf_parent_[leaf]; }

  /// Leaf labels of the subtree rooted at `c`, in traversal order.
  std::vector<std::string> subtree_labels(Child c) const;

 private:
  int K_ = 0, d_ = 0;
  std::vector<Child> left_, right_;
  std::vector<std::string> leaf_labels_;
  std::vector<int> depth_;
  std::vector<int> leaves_under_;
  std::vector<int> parent_;
  std::vector<int> leaf_parent_;
};

/// Parse a single Newick tree. Branch lengths are parsed and ignored; the
/// first subtree listed at a node becomes the left child. Errors carry the
/// byte offset of the offending token.
RawTree parse_newick_raw(std::string_view text);

/// Resolve multifurcations deterministically by left-ladder expansion:
/// children (c1, c2, ..., cm) become (c1, (c2, (..., cm))). Leaf set and
/// child order are preserved.
RawTree binarize(const RawTree& raw);

/// Parse straight to a PhyloTree. Multifurcations are an error unless
/// `binarize_multifurcations` is set.
PhyloTree parse_newick(std::string_view text, bool binarize_multifurcations = false);

/// Topology + labels only (no branch lengths); parse_newick round-trips it.
std::string serialize_newick(const PhyloTree& tree);

/// OTU count table; columns are matched to tree leaves by label, never by
/// position.
struct OtuTable {
  std::vector<std::string> sample_ids;
  std::vector<std::string> otu_labels;
  MatrixXi64 counts;  // n x K

  int sample_count() const { return static_cast<int>(counts.rows()); }
  int otu_count() const { return static_cast<int>(counts.cols()); }
};

/// Column index of each tree leaf within the table (by label); throws on any
/// mismatch between the two label sets.
std::vector<int> align_columns(const OtuTable& table, const PhyloTree& tree);

/// Per-sample binomial sufficient statistics at every interior node:
/// y_total(A) = count mass of the subtree, y_left(A) = mass of the left
/// child's subtree, kappa(A) = y_left - y_total / 2.
struct CountDecomposition {
  MatrixXi64 y_total;    // n x d
  MatrixXi64 y_left;     // n x d
  Eigen::MatrixXd kappa;  // n x d
};

CountDecomposition decompose_counts(const OtuTable& table, const PhyloTree& tree);

/// Decomposition of count rows already in tree-leaf order (one row per
/// sample); used by simulators and samplers that bypass label alignment.
CountDecomposition decompose_counts(const MatrixXi64& leaf_counts, const PhyloTree& tree);

}  // namespace ltn

#endif  // LTN_PHYLO_HPP

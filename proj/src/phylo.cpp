#include "ltn/phylo.hpp"

#include <cctype>
#include <functional>
#include <unordered_map>
#include <unordered_set>

#include "ltn/errors.hpp"

namespace ltn {

namespace {

class NewickParser {
 public:
  explicit NewickParser(std::string_view text) : text_(text) {}

  RawTree parse() {
    RawTree tree;
    skip_space();
    tree.root = parse_subtree(tree);
    skip_space();
    if (pos_ >= text_.size() || text_[pos_] != ';')
      fail("expected ';' terminating the tree");
    ++pos_;
    skip_space();
    if (pos_ != text_.size()) fail("trailing characters after ';'");
    return tree;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError("Newick parse error at byte " + std::to_string(pos_) + ": " + what);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  int parse_subtree(RawTree& tree) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      std::size_t open_pos = pos_;
      ++pos_;
      std::vector<int> children;
      children.push_back(parse_subtree(tree));
      skip_space();
      while (pos_ < text_.size() && text_[pos_] == ',') {
        ++pos_;
        children.push_back(parse_subtree(tree));
        skip_space();
      }
      if (pos_ >= text_.size() || text_[pos_] != ')') fail("expected ')' or ','");
      ++pos_;
      if (children.size() < 2) {
        pos_ = open_pos;
        fail("interior node with fewer than 2 children");
      }
      parse_label();  // interior labels (e.g. support values) are discarded
      parse_length();
      tree.nodes.push_back({std::string(), std::move(children)});
      return static_cast<int>(tree.nodes.size()) - 1;
    }
    std::string label = parse_label();
    if (label.empty()) fail("expected a leaf label");
    parse_length();
    tree.nodes.push_back({std::move(label), {}});
    return static_cast<int>(tree.nodes.size()) - 1;
  }

  std::string parse_label() {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == '\'') {
      ++pos_;
      std::string out;
      while (pos_ < text_.size() && text_[pos_] != '\'') out.push_back(text_[pos_++]);
      if (pos_ >= text_.size()) fail("unterminated quoted label");
      ++pos_;
      return out;
    }
    std::size_t start = pos_;
    while (pos_ < text_.size()) {
      char ch = text_[pos_];
      if (ch == '(' || ch == ')' || ch == ',' || ch == ';' || ch == ':' ||
          std::isspace(static_cast<unsigned char>(ch)))
        break;
      ++pos_;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  void parse_length() {
    skip_space();
    if (pos_ >= text_.size() || text_[pos_] != ':') return;
    ++pos_;
    skip_space();
    std::size_t start = pos_;
    while (pos_ < text_.size()) {
      char ch = text_[pos_];
      if ((ch >= '0' && ch <= '9') || ch == '.' || ch == '-' || ch == '+' || ch == 'e' ||
          ch == 'E') {
        ++pos_;
      } else {
        break;
      }
    }
    if (pos_ == start) fail("expected a branch length after ':'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

int binarize_children(const RawTree& in, RawTree& out, const std::vector<int>& children,
                      std::size_t first, const std::function<int(int)>& convert) {
  if (children.size() - first == 1) return convert(children[first]);
  int left = convert(children[first]);
  int right = binarize_children(in, out, children, first + 1, convert);
  out.nodes.push_back({std::string(), {left, right}});
  return static_cast<int>(out.nodes.size()) - 1;
}

}  // namespace

RawTree parse_newick_raw(std::string_view text) { return NewickParser(text).parse(); }

RawTree binarize(const RawTree& raw) {
  RawTree out;
  std::function<int(int)> convert = [&](int node_id) -> int {
    const RawTree::Node& node = raw.nodes[node_id];
    if (node.children.empty()) {
      out.nodes.push_back({node.label, {}});
      return static_cast<int>(out.nodes.size()) - 1;
    }
    if (node.children.size() < 2)
      throw ValidationError("binarize: interior node with fewer than 2 children");
    int left = convert(node.children[0]);
    int right = binarize_children(raw, out, node.children, 1, convert);
    out.nodes.push_back({std::string(), {left, right}});
    return static_cast<int>(out.nodes.size()) - 1;
  };
  out.root = convert(raw.root);
  return out;
}

PhyloTree PhyloTree::build(const RawTree& raw) {
  PhyloTree tree;
  if (raw.root < 0) throw ValidationError("empty tree");

  std::function<Child(int, int, int)> visit = [&](int node_id, int parent_idx,
                                                  int parent_depth) -> Child {
    const RawTree::Node& node = raw.nodes[node_id];
    if (node.children.empty()) {
      if (node.label.empty()) throw ValidationError("leaf with empty label");
      tree.leaf_labels_.push_back(node.label);
      tree.leaf_parent_.push_back(parent_idx);
      return Child{true, static_cast<int>(tree.leaf_labels_.size()) - 1};
    }
    if (node.children.size() != 2)
      throw ValidationError("tree is not full binary: node with " +
                            std::to_string(node.children.size()) + " children");
    int idx = static_cast<int>(tree.left_.size());
    tree.left_.push_back(Child{});
    tree.right_.push_back(Child{});
    tree.parent_.push_back(parent_idx);
    tree.depth_.push_back(parent_depth + 1);
    tree.leaves_under_.push_back(0);
    Child l = visit(node.children[0], idx, parent_depth + 1);
    Child r = visit(node.children[1], idx, parent_depth + 1);
    tree.left_[idx] = l;
    tree.right_[idx] = r;
    tree.leaves_under_[idx] = tree.leaves_under(l) + tree.leaves_under(r);
    return Child{false, idx};
  };

  Child root = visit(raw.root, -1, -1);
  if (root.leaf) throw ValidationError("tree must have at least 2 leaves");

  tree.K_ = static_cast<int>(tree.leaf_labels_.size());
  tree.d_ = static_cast<int>(tree.left_.size());

  std::unordered_set<std::string> seen;
  for (const std::string& label : tree.leaf_labels_) {
    if (!seen.insert(label).second)
      throw ValidationError("duplicate leaf label: '" + label + "'");
  }
  return tree;
}

std::vector<std::string> PhyloTree::subtree_labels(Child c) const {
  if (c.leaf) return {leaf_labels_[c.idx]};
  std::vector<std::string> out;
  std::function<void(Child)> walk = [&](Child ch) {
    if (ch.leaf) {
      out.push_back(leaf_labels_[ch.idx]);
    } else {
      walk(left_[ch.idx]);
      walk(right_[ch.idx]);
    }
  };
  walk(c);
  return out;
}

PhyloTree parse_newick(std::string_view text, bool binarize_multifurcations) {
  RawTree raw = parse_newick_raw(text);
  bool multifurcating = false;
  for (const auto& node : raw.nodes) {
    if (node.children.size() > 2) multifurcating = true;
  }
  if (multifurcating) {
    if (!binarize_multifurcations)
      throw ValidationError(
          "tree contains multifurcations; pass the binarize flag to resolve them");
    raw = binarize(raw);
  }
  return PhyloTree::build(raw);
}

std::string serialize_newick(const PhyloTree& tree) {
  std::string out;
  std::function<void(PhyloTree::Child)> walk = [&](PhyloTree::Child c) {
    if (c.leaf) {
      out += tree.leaf_labels()[c.idx];
      return;
    }
    out += '(';
    walk(tree.left(c.idx));
    out += ',';
    walk(tree.right(c.idx));
    out += ')';
  };
  walk(PhyloTree::Child{false, 0});
  out += ';';
  return out;
}

std::vector<int> align_columns(const OtuTable& table, const PhyloTree& tree) {
  if (table.otu_count() != tree.leaf_count())
    throw ValidationError("OTU table has " + std::to_string(table.otu_count()) +
                          " columns but the tree has " + std::to_string(tree.leaf_count()) +
                          " leaves");
  std::unordered_map<std::string, int> col_of;
  for (int j = 0; j < table.otu_count(); ++j) {
    if (!col_of.emplace(table.otu_labels[j], j).second)
      throw ValidationError("duplicate OTU column label: '" + table.otu_labels[j] + "'");
  }
  std::vector<int> cols(tree.leaf_count());
  for (int u = 0; u < tree.leaf_count(); ++u) {
    auto it = col_of.find(tree.leaf_labels()[u]);
    if (it == col_of.end())
      throw ValidationError("tree leaf '" + tree.leaf_labels()[u] +
                            "' has no matching OTU table column");
    cols[u] = it->second;
  }
  return cols;
}

CountDecomposition decompose_counts(const MatrixXi64& leaf_counts, const PhyloTree& tree) {
  const int n = static_cast<int>(leaf_counts.rows());
  const int d = tree.interior_count();
  if (leaf_counts.cols() != tree.leaf_count())
    throw ValidationError("count matrix width does not match the tree leaf count");
  if ((leaf_counts.array() < 0).any())
    throw ValidationError("negative count in OTU table");

  CountDecomposition dec;
  dec.y_total.resize(n, d);
  dec.y_left.resize(n, d);
  dec.kappa.resize(n, d);

  std::vector<std::int64_t> mass(d);
  for (int i = 0; i < n; ++i) {
    // Descending index order visits children before parents (pre-order ids).
    for (int a = d - 1; a >= 0; --a) {
      PhyloTree::Child l = tree.left(a);
      PhyloTree::Child r = tree.right(a);
      std::int64_t ml = l.leaf ? leaf_counts(i, l.idx) : mass[l.idx];
      std::int64_t mr = r.leaf ? leaf_counts(i, r.idx) : mass[r.idx];
      mass[a] = ml + mr;
      dec.y_total(i, a) = ml + mr;
      dec.y_left(i, a) = ml;
      dec.kappa(i, a) = static_cast<double>(ml) - 0.5 * static_cast<double>(ml + mr);
    }
    if (dec.y_total(i, 0) <= 0)
      throw ValidationError("sample " + std::to_string(i) + " has zero total count");
  }
  return dec;
}

CountDecomposition decompose_counts(const OtuTable& table, const PhyloTree& tree) {
  std::vector<int> cols = align_columns(table, tree);
  MatrixXi64 reordered(table.sample_count(), tree.leaf_count());
  for (int u = 0; u < tree.leaf_count(); ++u) reordered.col(u) = table.counts.col(cols[u]);
  return decompose_counts(reordered, tree);
}

}  // namespace ltn

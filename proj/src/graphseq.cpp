#include "lemcpd/graphseq.hpp"

#include "lemcpd/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace lemcpd {

namespace fs = std::filesystem;

GraphSnapshot::GraphSnapshot(Timestamp timestamp, Matrix weights, Directedness directedness)
    : timestamp_(timestamp),
      weights_(std::make_shared<const Matrix>(std::move(weights))),
      directedness_(directedness) {
  if (weights_->rows() != weights_->cols()) {
    throw DataError("weight matrix must be square, got " + std::to_string(weights_->rows()) +
                    "x" + std::to_string(weights_->cols()));
  }
}

GraphSnapshot GraphSnapshot::with_timestamp(Timestamp t) const {
  GraphSnapshot copy = *this;
  copy.timestamp_ = t;
  return copy;
}

std::vector<std::string> validate(const GraphSnapshot& snap) {
  std::vector<std::string> violations;
  const Matrix& w = snap.weights();
  if (!w.allFinite()) violations.emplace_back("non-finite weight");
  if ((w.array() < 0.0).any()) violations.emplace_back("negative weight");
  if (snap.undirected() && w != w.transpose()) {
    violations.emplace_back("asymmetric");
  }
  return violations;
}

void require_valid(const GraphSnapshot& snap) {
  auto violations = validate(snap);
  if (violations.empty()) return;
  std::string msg = "invalid snapshot at t=" + std::to_string(snap.timestamp()) + ":";
  for (const auto& v : violations) msg += " " + v + ";";
  throw DataError(msg);
}

GraphSequence::GraphSequence(std::vector<GraphSnapshot> snapshots)
    : snapshots_(std::move(snapshots)) {
  if (snapshots_.empty()) return;
  nodes_ = snapshots_.front().size();
  for (std::size_t i = 0; i < snapshots_.size(); ++i) {
    const auto& s = snapshots_[i];
    if (s.size() != nodes_) {
      throw DataError("node count mismatch: snapshot t=" + std::to_string(s.timestamp()) +
                      " has " + std::to_string(s.size()) + " nodes, expected " +
                      std::to_string(nodes_));
    }
    if (i > 0 && s.timestamp() != snapshots_[i - 1].timestamp() + 1) {
      throw DataError("timestamps must be contiguous and increasing at t=" +
                      std::to_string(s.timestamp()));
    }
  }
}

GraphSequence GraphSequence::from_matrices(std::vector<Matrix> weights, Timestamp first,
                                           Directedness directedness) {
  std::vector<GraphSnapshot> snaps;
  snaps.reserve(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    snaps.emplace_back(first + static_cast<Timestamp>(i), std::move(weights[i]), directedness);
  }
  return GraphSequence(std::move(snaps));
}

Timestamp GraphSequence::first_timestamp() const {
  if (empty()) throw DataError("empty sequence has no timestamps");
  return snapshots_.front().timestamp();
}

Timestamp GraphSequence::last_timestamp() const {
  if (empty()) throw DataError("empty sequence has no timestamps");
  return snapshots_.back().timestamp();
}

bool GraphSequence::contains(Timestamp t) const {
  return !empty() && t >= first_timestamp() && t <= last_timestamp();
}

const GraphSnapshot& GraphSequence::at_time(Timestamp t) const {
  if (!contains(t)) throw DataError("timestamp " + std::to_string(t) + " not in sequence");
  return snapshots_[static_cast<std::size_t>(t - first_timestamp())];
}

bool GraphSequence::all_symmetric() const {
  return std::all_of(snapshots_.begin(), snapshots_.end(), [](const GraphSnapshot& s) {
    return s.weights() == s.weights().transpose();
  });
}

GraphSequence window(const GraphSequence& seq, Timestamp end, std::size_t size) {
  if (size == 0) throw ConfigError("window size must be positive");
  if (seq.empty()) throw DataError("insufficient history: empty sequence");
  const Timestamp start = end - static_cast<Timestamp>(size) + 1;
  if (start < seq.first_timestamp()) {
    throw DataError("insufficient history: window [" + std::to_string(start) + ", " +
                    std::to_string(end) + "] starts before t=" +
                    std::to_string(seq.first_timestamp()));
  }
  if (end > seq.last_timestamp()) {
    throw DataError("window end t=" + std::to_string(end) + " exceeds available history");
  }
  const auto offset = static_cast<std::size_t>(start - seq.first_timestamp());
  std::vector<GraphSnapshot> snaps(seq.snapshots().begin() + offset,
                                   seq.snapshots().begin() + offset + size);
  return GraphSequence(std::move(snaps));
}

double frobenius_distance(const GraphSnapshot& a, const GraphSnapshot& b) {
  if (a.size() != b.size()) {
    throw DataError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()));
  }
  return (a.weights() - b.weights()).norm();
}

std::string format_weight(double w) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", w);
  return buf;
}

namespace {

struct EdgeRecord {
  Timestamp t;
  std::string src;
  std::string dst;
  double weight;
  std::size_t line;
  std::string file;
};

struct Header {
  std::optional<std::size_t> nodes;
  std::optional<Directedness> directedness;
  std::optional<std::pair<Timestamp, Timestamp>> range;
};

std::string where(const std::string& file, std::size_t line) {
  return file.empty() ? "line " + std::to_string(line)
                      : file + " line " + std::to_string(line);
}

template <typename T>
bool parse_number(const std::string& token, T& out) {
  const char* first = token.data();
  const char* last = first + token.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> tokens;
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

void merge_header(Header& into, const Header& from, const std::string& file) {
  auto conflict = [&](const char* what) {
    throw DataError(std::string("conflicting '") + what + "' header in " + file);
  };
  if (from.nodes) {
    if (into.nodes && *into.nodes != *from.nodes) conflict("nodes");
    into.nodes = from.nodes;
  }
  if (from.directedness) {
    if (into.directedness && *into.directedness != *from.directedness) conflict("directed");
    into.directedness = from.directedness;
  }
  if (from.range) {
    if (into.range) {
      into.range->first = std::min(into.range->first, from.range->first);
      into.range->second = std::max(into.range->second, from.range->second);
    } else {
      into.range = from.range;
    }
  }
}

void parse_header_comment(const std::vector<std::string>& tokens, Header& header,
                          const std::string& loc) {
  // tokens[0] is "#"; recognised directives follow, anything else is a comment.
  if (tokens.size() < 2) return;
  const std::string& key = tokens[1];
  if (key == "nodes" && tokens.size() == 3) {
    std::size_t n = 0;
    if (!parse_number(tokens[2], n)) throw DataError("parse error at " + loc + ": bad node count");
    header.nodes = n;
  } else if (key == "directed" && tokens.size() == 3) {
    if (tokens[2] == "true" || tokens[2] == "1") {
      header.directedness = Directedness::kDirected;
    } else if (tokens[2] == "false" || tokens[2] == "0") {
      header.directedness = Directedness::kUndirected;
    } else {
      throw DataError("parse error at " + loc + ": bad directed flag '" + tokens[2] + "'");
    }
  } else if (key == "timestamps" && tokens.size() == 4) {
    Timestamp a = 0, b = 0;
    if (!parse_number(tokens[2], a) || !parse_number(tokens[3], b) || b < a) {
      throw DataError("parse error at " + loc + ": bad timestamp range");
    }
    header.range = std::make_pair(a, b);
  }
}

void parse_stream(std::istream& in, const std::string& file, std::vector<EdgeRecord>& records,
                  Header& header) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const std::string loc = where(file, lineno);
    if (line[first] == '#') {
      auto tokens = split_ws(line.substr(first + 1));
      tokens.insert(tokens.begin(), "#");
      parse_header_comment(tokens, header, loc);
      continue;
    }
    auto tokens = split_ws(line);
    if (tokens.size() != 4) {
      throw DataError("parse error at " + loc + ": expected '<t> <src> <dst> <weight>'");
    }
    EdgeRecord rec{0, tokens[1], tokens[2], 0.0, lineno, file};
    if (!parse_number(tokens[0], rec.t)) {
      throw DataError("parse error at " + loc + ": bad timestamp '" + tokens[0] + "'");
    }
    if (!parse_number(tokens[3], rec.weight) || !std::isfinite(rec.weight)) {
      throw DataError("parse error at " + loc + ": bad weight '" + tokens[3] + "'");
    }
    if (rec.weight < 0.0) throw DataError("negative weight at " + loc);
    records.push_back(std::move(rec));
  }
}

GraphSequence assemble(const std::vector<EdgeRecord>& records, const Header& header,
                       const LoadOptions& options) {
  const Directedness dir =
      options.directedness.value_or(header.directedness.value_or(Directedness::kDirected));

  std::optional<std::size_t> declared = options.nodes ? options.nodes : header.nodes;
  if (options.nodes && header.nodes && *options.nodes != *header.nodes) {
    throw DataError("node count mismatch: header declares " + std::to_string(*header.nodes) +
                    ", caller expects " + std::to_string(*options.nodes));
  }

  std::map<std::string, std::size_t> index;
  std::size_t n = 0;
  if (declared) {
    n = *declared;
    for (const auto& r : records) {
      for (const std::string* id : {&r.src, &r.dst}) {
        std::size_t v = 0;
        if (!parse_number(*id, v)) {
          throw DataError("parse error at " + where(r.file, r.line) +
                          ": node id must be an integer when the node count is declared");
        }
        if (v >= n) {
          throw DataError("node count mismatch: node " + *id + " at " + where(r.file, r.line) +
                          " outside declared " + std::to_string(n) + " nodes");
        }
        index.emplace(*id, v);
      }
    }
  } else {
    std::set<std::string> ids;
    for (const auto& r : records) {
      ids.insert(r.src);
      ids.insert(r.dst);
    }
    std::vector<std::string> sorted(ids.begin(), ids.end());
    const bool numeric = std::all_of(sorted.begin(), sorted.end(), [](const std::string& s) {
      std::uint64_t v = 0;
      return parse_number(s, v);
    });
    if (numeric) {
      std::sort(sorted.begin(), sorted.end(), [](const std::string& a, const std::string& b) {
        std::uint64_t x = 0, y = 0;
        parse_number(a, x);
        parse_number(b, y);
        return x != y ? x < y : a < b;
      });
    }
    for (const auto& id : sorted) index.emplace(id, n++);
  }

  Timestamp first = 0, last = -1;
  if (header.range) {
    first = header.range->first;
    last = header.range->second;
  }
  if (!records.empty()) {
    auto [lo, hi] = std::minmax_element(records.begin(), records.end(),
                                        [](const auto& a, const auto& b) { return a.t < b.t; });
    if (header.range) {
      if (lo->t < first || hi->t > last) {
        throw DataError("record timestamp outside declared range at " +
                        where(lo->t < first ? lo->file : hi->file,
                              lo->t < first ? lo->line : hi->line));
      }
    } else {
      first = lo->t;
      last = hi->t;
    }
  }
  if (last < first) throw DataError("sequence contains no snapshots");

  const auto count = static_cast<std::size_t>(last - first + 1);
  std::vector<Matrix> weights(count, Matrix::Zero(static_cast<Eigen::Index>(n),
                                                  static_cast<Eigen::Index>(n)));
  for (const auto& r : records) {
    Matrix& w = weights[static_cast<std::size_t>(r.t - first)];
    const auto i = static_cast<Eigen::Index>(index.at(r.src));
    const auto j = static_cast<Eigen::Index>(index.at(r.dst));
    auto assign = [&](Eigen::Index a, Eigen::Index b) {
      if (w(a, b) != 0.0 && w(a, b) != r.weight) {
        throw DataError("conflicting weight for edge " + r.src + "->" + r.dst + " at " +
                        where(r.file, r.line));
      }
      w(a, b) = r.weight;
    };
    assign(i, j);
    if (dir == Directedness::kUndirected && i != j) assign(j, i);
  }
  return GraphSequence::from_matrices(std::move(weights), first, dir);
}

}  // namespace

GraphSequence load_sequence(const fs::path& path, SequenceFormat format,
                            const LoadOptions& options) {
  std::vector<EdgeRecord> records;
  Header header;
  if (format == SequenceFormat::kEdgeListFile) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    parse_stream(in, "", records, header);
  } else {
    if (!fs::is_directory(path)) throw DataError("not a directory: " + path.string());
    std::vector<std::pair<Timestamp, fs::path>> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      const std::string name = entry.path().filename().string();
      if (entry.path().extension() != ".edges" || name.size() < 8 || name[0] != 't') continue;
      Timestamp t = 0;
      if (!parse_number(name.substr(1, name.size() - 7), t)) continue;
      files.emplace_back(t, entry.path());
    }
    if (files.empty()) throw DataError("no t<index>.edges files in " + path.string());
    std::sort(files.begin(), files.end());
    Header merged;
    for (const auto& [t, file] : files) {
      std::ifstream in(file);
      if (!in) throw DataError("cannot open " + file.string());
      const std::size_t before = records.size();
      Header local;
      parse_stream(in, file.filename().string(), records, local);
      for (std::size_t i = before; i < records.size(); ++i) {
        if (records[i].t != t) {
          throw DataError("timestamp mismatch at " + where(records[i].file, records[i].line) +
                          ": file is for t=" + std::to_string(t));
        }
      }
      local.range.reset();
      merge_header(merged, local, file.filename().string());
      const auto range = std::make_pair(t, t);
      if (!merged.range) {
        merged.range = range;
      } else {
        merged.range->first = std::min(merged.range->first, t);
        merged.range->second = std::max(merged.range->second, t);
      }
    }
    header = merged;
  }
  return assemble(records, header, options);
}

GraphSequence load_sequence(const fs::path& path, const LoadOptions& options) {
  return load_sequence(path,
                       fs::is_directory(path) ? SequenceFormat::kEdgeListDirectory
                                              : SequenceFormat::kEdgeListFile,
                       options);
}

namespace {

void write_header(std::ostream& out, const GraphSequence& seq, Timestamp first, Timestamp last) {
  const bool undirected = !seq.empty() && seq[0].undirected();
  out << "# nodes " << seq.nodes() << "\n";
  out << "# directed " << (undirected ? "false" : "true") << "\n";
  out << "# timestamps " << first << " " << last << "\n";
}

void write_edges(std::ostream& out, const GraphSnapshot& snap) {
  const Matrix& w = snap.weights();
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = snap.undirected() ? i : 0; j < w.cols(); ++j) {
      if (w(i, j) == 0.0) continue;
      out << snap.timestamp() << ' ' << i << ' ' << j << ' ' << format_weight(w(i, j)) << '\n';
    }
  }
}

}  // namespace

void save_sequence(const GraphSequence& seq, const fs::path& path) {
  if (seq.empty()) throw DataError("cannot save an empty sequence");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_header(out, seq, seq.first_timestamp(), seq.last_timestamp());
  for (const auto& snap : seq) write_edges(out, snap);
  if (!out) throw DataError("write failed: " + path.string());
}

void save_sequence_directory(const GraphSequence& seq, const fs::path& dir) {
  if (seq.empty()) throw DataError("cannot save an empty sequence");
  fs::create_directories(dir);
  for (const auto& snap : seq) {
    const fs::path file = dir / ("t" + std::to_string(snap.timestamp()) + ".edges");
    std::ofstream out(file);
    if (!out) throw DataError("cannot write " + file.string());
    write_header(out, seq, snap.timestamp(), snap.timestamp());
    write_edges(out, snap);
  }
}

LabelSet load_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  LabelSet labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto tokens = split_ws(line);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    Timestamp t = 0;
    if (tokens.size() != 2 || !parse_number(tokens[0], t)) {
      throw DataError("parse error at line " + std::to_string(lineno) +
                      ": expected '<t> change|event'");
    }
    if (tokens[1] == "change") {
      labels.change_points.insert(t);
    } else if (tokens[1] == "event") {
      labels.events.insert(t);
    } else {
      throw DataError("parse error at line " + std::to_string(lineno) + ": unknown label '" +
                      tokens[1] + "'");
    }
  }
  for (Timestamp t : labels.events) {
    if (labels.change_points.count(t)) {
      throw DataError("timestamp " + std::to_string(t) + " labelled both change and event");
    }
  }
  return labels;
}

void save_labels(const LabelSet& labels, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  std::map<Timestamp, const char*> lines;
  for (Timestamp t : labels.change_points) lines[t] = "change";
  for (Timestamp t : labels.events) lines[t] = "event";
  for (const auto& [t, kind] : lines) out << t << ' ' << kind << '\n';
}

}  // namespace lemcpd

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "hmnem/dataset.hpp"
#include "hmnem/errors.hpp"
#include "hmnem/graph.hpp"
#include "hmnem/sampler.hpp"

namespace hmnem {

// Shortest decimal form that parses back to the same double, so files
// round-trip losslessly and rewrites are byte-identical.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& context) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw IoError(context + ": expected a number, got '" + std::string(s) + "'");
  return v;
}

inline long long parse_int(std::string_view s, const std::string& context) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw IoError(context + ": expected an integer, got '" + std::string(s) + "'");
  return v;
}

inline std::uint64_t parse_uint64(std::string_view s, const std::string& context) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw IoError(context + ": expected an unsigned integer, got '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(line.substr(start));
      return parts;
    }
    parts.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string fnv1a64_hex(std::string_view bytes) {
  static const char* digits = "0123456789abcdef";
  std::uint64_t h = fnv1a64(bytes);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("failed while reading '" + path + "'");
  return std::move(buf).str();
}

inline void write_file(const std::string& path, std::string_view bytes) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
    if (ec) throw IoError("cannot create directory '" + parent.string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed while writing '" + path + "'");
}

// Sequential reader with positions for error messages. Skips nothing;
// blank lines are meaningful only where a format says so.
class LineReader {
 public:
  LineReader(std::string content, std::string path)
      : content_(std::move(content)), path_(std::move(path)) {}

  bool next(std::string_view& line) {
    if (pos_ >= content_.size()) return false;
    const std::size_t eol = content_.find('\n', pos_);
    const std::size_t end = eol == std::string::npos ? content_.size() : eol;
    line = std::string_view(content_).substr(pos_, end - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = eol == std::string::npos ? content_.size() : eol + 1;
    ++line_no_;
    return true;
  }

  std::string_view expect(const std::string& what) {
    std::string_view line;
    if (!next(line)) fail("unexpected end of file, expected " + what);
    return line;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw IoError(path_ + ":" + std::to_string(line_no_) + ": " + msg);
  }

  std::string context() const { return path_ + ":" + std::to_string(line_no_); }

 private:
  std::string content_;
  std::string path_;
  std::size_t pos_ = 0;
  int line_no_ = 0;
};

namespace detail {

// Header lines look like "#key value"; returns the value for a required key.
inline std::string_view header_value(LineReader& r, std::string_view key) {
  const std::string_view line = r.expect(std::string("header '#") + std::string(key) + "'");
  if (line.size() < key.size() + 2 || line[0] != '#' ||
      line.substr(1, key.size()) != key || line[key.size() + 1] != ' ')
    r.fail("expected header '#" + std::string(key) + "'");
  return line.substr(key.size() + 2);
}

inline std::vector<int> parse_int_list(std::string_view csv, const std::string& context) {
  std::vector<int> out;
  for (const auto part : split(csv, ','))
    out.push_back(static_cast<int>(parse_int(part, context)));
  return out;
}

inline std::string join_ints(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

}  // namespace detail

// ---- dataset files ----
//
//   #hmnem-dataset v1
//   #mode binary|probability
//   #alpha .. / #beta ..
//   #components / #reporters / #columns / #timepoints
//   #col-targets k0,k1,...          column -> perturbed component
//   #attachments a0,a1,...          optional, reporter -> component
//   then per timepoint: "#t <idx>" and one comma-separated row per reporter.

inline std::string serialize_datasets(const std::vector<EffectDataset>& data) {
  require(!data.empty(), "serialize_datasets: no timepoints");
  const auto& first = data.front();
  for (const auto& d : data) {
    require(d.n_components() == first.n_components() &&
                d.col_targets() == first.col_targets() &&
                d.n_reporters() == first.n_reporters() && d.mode() == first.mode() &&
                d.alpha() == first.alpha() && d.beta() == first.beta() &&
                d.attachments() == first.attachments(),
            "serialize_datasets: timepoints must share layout, mode and rates");
  }
  std::string out = "#hmnem-dataset v1\n";
  out += std::string("#mode ") + (first.mode() == DataMode::binary ? "binary" : "probability") +
         "\n";
  out += "#alpha " + format_double(first.alpha()) + "\n";
  out += "#beta " + format_double(first.beta()) + "\n";
  out += "#components " + std::to_string(first.n_components()) + "\n";
  out += "#reporters " + std::to_string(first.n_reporters()) + "\n";
  out += "#columns " + std::to_string(first.n_columns()) + "\n";
  out += "#timepoints " + std::to_string(data.size()) + "\n";
  out += "#col-targets " + detail::join_ints(first.col_targets()) + "\n";
  if (first.has_attachments())
    out += "#attachments " + detail::join_ints(first.attachments()) + "\n";
  for (std::size_t t = 0; t < data.size(); ++t) {
    out += "#t " + std::to_string(t) + "\n";
    for (int i = 0; i < first.n_reporters(); ++i) {
      for (int k = 0; k < first.n_columns(); ++k) {
        if (k) out += ',';
        const double v = data[t].at(i, k);
        if (first.mode() == DataMode::binary)
          out += v == 1.0 ? '1' : '0';
        else
          out += format_double(v);
      }
      out += '\n';
    }
  }
  return out;
}

inline void write_datasets(const std::string& path, const std::vector<EffectDataset>& data) {
  write_file(path, serialize_datasets(data));
}

inline std::vector<EffectDataset> parse_datasets(std::string content, const std::string& path) {
  LineReader r(std::move(content), path);
  if (r.expect("format line") != "#hmnem-dataset v1") r.fail("not a dataset file");
  const auto mode_s = detail::header_value(r, "mode");
  DataMode mode;
  if (mode_s == "binary")
    mode = DataMode::binary;
  else if (mode_s == "probability")
    mode = DataMode::probability;
  else
    r.fail("unknown mode '" + std::string(mode_s) + "'");
  const double alpha = parse_double(detail::header_value(r, "alpha"), r.context());
  const double beta = parse_double(detail::header_value(r, "beta"), r.context());
  const int n = static_cast<int>(parse_int(detail::header_value(r, "components"), r.context()));
  const int m = static_cast<int>(parse_int(detail::header_value(r, "reporters"), r.context()));
  const int cols = static_cast<int>(parse_int(detail::header_value(r, "columns"), r.context()));
  const int timepoints =
      static_cast<int>(parse_int(detail::header_value(r, "timepoints"), r.context()));
  if (timepoints < 1) r.fail("timepoint count must be positive");
  const auto col_targets =
      detail::parse_int_list(detail::header_value(r, "col-targets"), r.context());
  if (static_cast<int>(col_targets.size()) != cols)
    r.fail("col-targets length disagrees with #columns");

  std::vector<int> attachments;
  std::string_view line = r.expect("'#t 0' or '#attachments'");
  if (line.starts_with("#attachments ")) {
    attachments = detail::parse_int_list(line.substr(13), r.context());
    line = r.expect("'#t 0'");
  }

  std::vector<EffectDataset> out;
  out.reserve(timepoints);
  for (int t = 0; t < timepoints; ++t) {
    if (line != "#t " + std::to_string(t)) r.fail("expected '#t " + std::to_string(t) + "'");
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(m) * cols);
    for (int i = 0; i < m; ++i) {
      const auto parts = split(r.expect("data row"), ',');
      if (static_cast<int>(parts.size()) != cols) r.fail("wrong number of columns");
      for (const auto part : parts) values.push_back(parse_double(part, r.context()));
    }
    try {
      out.emplace_back(n, col_targets, m, mode, alpha, beta, std::move(values), attachments);
    } catch (const ValidationError& e) {
      r.fail(e.what());
    }
    if (t + 1 < timepoints) line = r.expect("'#t " + std::to_string(t + 1) + "'");
  }
  if (r.next(line) && !line.empty()) r.fail("trailing content after last timepoint");
  return out;
}

inline std::vector<EffectDataset> read_datasets(const std::string& path) {
  return parse_datasets(read_file(path), path);
}

// ---- network path files (binary adjacency) ----

inline std::string serialize_networks(const std::vector<Network>& path) {
  require(!path.empty(), "serialize_networks: empty path");
  const int n = path.front().n();
  std::string out = "#hmnem-networks v1\n";
  out += "#n " + std::to_string(n) + "\n";
  out += "#timepoints " + std::to_string(path.size()) + "\n";
  for (std::size_t t = 0; t < path.size(); ++t) {
    require(path[t].n() == n, "serialize_networks: dimension mismatch");
    out += "#t " + std::to_string(t) + "\n";
    for (int from = 0; from < n; ++from) {
      for (int to = 0; to < n; ++to) {
        if (to) out += ',';
        out += path[t].edge(from, to) && from != to ? '1' : '0';
      }
      out += '\n';
    }
  }
  return out;
}

inline void write_networks(const std::string& path, const std::vector<Network>& nets) {
  write_file(path, serialize_networks(nets));
}

inline std::vector<Network> parse_networks(std::string content, const std::string& path) {
  LineReader r(std::move(content), path);
  if (r.expect("format line") != "#hmnem-networks v1") r.fail("not a networks file");
  const int n = static_cast<int>(parse_int(detail::header_value(r, "n"), r.context()));
  const int timepoints =
      static_cast<int>(parse_int(detail::header_value(r, "timepoints"), r.context()));
  if (n < 1 || n > 64) r.fail("component count must lie in [1, 64]");
  if (timepoints < 1) r.fail("timepoint count must be positive");
  std::vector<Network> out;
  out.reserve(timepoints);
  for (int t = 0; t < timepoints; ++t) {
    if (r.expect("'#t'") != "#t " + std::to_string(t))
      r.fail("expected '#t " + std::to_string(t) + "'");
    Network g(n);
    for (int from = 0; from < n; ++from) {
      const auto parts = split(r.expect("adjacency row"), ',');
      if (static_cast<int>(parts.size()) != n) r.fail("wrong adjacency row length");
      for (int to = 0; to < n; ++to) {
        const long long v = parse_int(parts[to], r.context());
        if (v != 0 && v != 1) r.fail("adjacency entries must be 0 or 1");
        if (from == to) {
          if (v != 0) r.fail("diagonal entries must be 0");
        } else if (v == 1) {
          g.set_edge(from, to, true);
        }
      }
    }
    out.push_back(std::move(g));
  }
  std::string_view line;
  if (r.next(line) && !line.empty()) r.fail("trailing content after last timepoint");
  return out;
}

inline std::vector<Network> read_networks(const std::string& path) {
  return parse_networks(read_file(path), path);
}

// ---- edge frequency files (real-valued expected networks) ----

inline std::string serialize_edge_frequencies(const std::vector<std::vector<double>>& means,
                                              int n) {
  require(!means.empty(), "serialize_edge_frequencies: empty sequence");
  std::string out = "#hmnem-edge-frequencies v1\n";
  out += "#n " + std::to_string(n) + "\n";
  out += "#timepoints " + std::to_string(means.size()) + "\n";
  for (std::size_t t = 0; t < means.size(); ++t) {
    require(means[t].size() == static_cast<std::size_t>(n) * n,
            "serialize_edge_frequencies: shape mismatch");
    out += "#t " + std::to_string(t) + "\n";
    for (int from = 0; from < n; ++from) {
      for (int to = 0; to < n; ++to) {
        if (to) out += ',';
        out += format_double(means[t][static_cast<std::size_t>(from) * n + to]);
      }
      out += '\n';
    }
  }
  return out;
}

inline void write_edge_frequencies(const std::string& path,
                                   const std::vector<std::vector<double>>& means, int n) {
  write_file(path, serialize_edge_frequencies(means, n));
}

struct EdgeFrequencies {
  int n = 0;
  std::vector<std::vector<double>> means;
};

inline EdgeFrequencies parse_edge_frequencies(std::string content, const std::string& path) {
  LineReader r(std::move(content), path);
  if (r.expect("format line") != "#hmnem-edge-frequencies v1")
    r.fail("not an edge frequency file");
  EdgeFrequencies out;
  out.n = static_cast<int>(parse_int(detail::header_value(r, "n"), r.context()));
  const int timepoints =
      static_cast<int>(parse_int(detail::header_value(r, "timepoints"), r.context()));
  if (out.n < 1 || out.n > 64) r.fail("component count must lie in [1, 64]");
  if (timepoints < 1) r.fail("timepoint count must be positive");
  for (int t = 0; t < timepoints; ++t) {
    if (r.expect("'#t'") != "#t " + std::to_string(t))
      r.fail("expected '#t " + std::to_string(t) + "'");
    std::vector<double> mat(static_cast<std::size_t>(out.n) * out.n);
    for (int from = 0; from < out.n; ++from) {
      const auto parts = split(r.expect("frequency row"), ',');
      if (static_cast<int>(parts.size()) != out.n) r.fail("wrong frequency row length");
      for (int to = 0; to < out.n; ++to)
        mat[static_cast<std::size_t>(from) * out.n + to] = parse_double(parts[to], r.context());
    }
    out.means.push_back(std::move(mat));
  }
  std::string_view line;
  if (r.next(line) && !line.empty()) r.fail("trailing content after last timepoint");
  return out;
}

inline EdgeFrequencies read_edge_frequencies(const std::string& path) {
  return parse_edge_frequencies(read_file(path), path);
}

// ---- attachment map files ----

inline std::string serialize_attachments(const std::vector<int>& attachments, int n) {
  std::string out = "#hmnem-attachments v1\n";
  out += "#components " + std::to_string(n) + "\n";
  out += "#reporters " + std::to_string(attachments.size()) + "\n";
  for (int a : attachments) out += std::to_string(a) + "\n";
  return out;
}

inline void write_attachments(const std::string& path, const std::vector<int>& attachments,
                              int n) {
  write_file(path, serialize_attachments(attachments, n));
}

inline std::vector<int> parse_attachments(std::string content, const std::string& path) {
  LineReader r(std::move(content), path);
  if (r.expect("format line") != "#hmnem-attachments v1") r.fail("not an attachments file");
  const int n = static_cast<int>(parse_int(detail::header_value(r, "components"), r.context()));
  const int m = static_cast<int>(parse_int(detail::header_value(r, "reporters"), r.context()));
  if (m < 1) r.fail("reporter count must be positive");
  std::vector<int> out;
  out.reserve(m);
  for (int i = 0; i < m; ++i) {
    const int a = static_cast<int>(parse_int(r.expect("attachment row"), r.context()));
    if (a < 0 || a >= n) r.fail("attachment to unknown component");
    out.push_back(a);
  }
  std::string_view line;
  if (r.next(line) && !line.empty()) r.fail("trailing content after attachments");
  return out;
}

inline std::vector<int> read_attachments(const std::string& path) {
  return parse_attachments(read_file(path), path);
}

// ---- trace files ----

inline std::string serialize_trace(const Trace& tr) {
  std::string out = "#hmnem-trace v1\n";
  out += "#iterations " + std::to_string(tr.iterations) + "\n";
  out += "#burn-in " + std::to_string(tr.burn_in) + "\n";
  out += "#n " + std::to_string(tr.n) + "\n";
  out += "#timepoints " + std::to_string(tr.timepoints) + "\n";
  out += "#seed " + std::to_string(tr.seed) + "\n";
  out += "#sweeps iteration,lambda,log_joint,kappa_accepted\n";
  for (int i = 0; i < tr.iterations; ++i) {
    out += std::to_string(i + 1);
    out += ',';
    out += format_double(tr.lambda_samples[i]);
    out += ',';
    out += format_double(tr.log_joint[i]);
    out += ',';
    out += tr.kappa_accepted[i] ? '1' : '0';
    out += '\n';
  }
  out += "#edge-sums t,from,to,count\n";
  for (int t = 0; t < tr.timepoints; ++t)
    for (int from = 0; from < tr.n; ++from)
      for (int to = 0; to < tr.n; ++to)
        out += std::to_string(t) + ',' + std::to_string(from) + ',' + std::to_string(to) + ',' +
               std::to_string(tr.edge_sum(t, from, to)) + '\n';
  if (!tr.snapshots.empty()) {
    out += "#snapshots iteration,t,adjacency\n";
    for (const auto& snap : tr.snapshots) {
      for (int t = 0; t < tr.timepoints; ++t) {
        out += std::to_string(snap.iteration) + ',' + std::to_string(t) + ',';
        for (int from = 0; from < tr.n; ++from)
          for (int to = 0; to < tr.n; ++to)
            out += snap.path[t].edge(from, to) && from != to ? '1' : '0';
        out += '\n';
      }
    }
  }
  return out;
}

inline void write_trace(const std::string& path, const Trace& tr) {
  write_file(path, serialize_trace(tr));
}

inline Trace parse_trace(std::string content, const std::string& path) {
  LineReader r(std::move(content), path);
  if (r.expect("format line") != "#hmnem-trace v1") r.fail("not a trace file");
  Trace tr;
  tr.iterations = static_cast<int>(parse_int(detail::header_value(r, "iterations"), r.context()));
  tr.burn_in = static_cast<int>(parse_int(detail::header_value(r, "burn-in"), r.context()));
  tr.n = static_cast<int>(parse_int(detail::header_value(r, "n"), r.context()));
  tr.timepoints = static_cast<int>(parse_int(detail::header_value(r, "timepoints"), r.context()));
  tr.seed = parse_uint64(detail::header_value(r, "seed"), r.context());
  if (tr.iterations < 1) r.fail("iteration count must be positive");
  if (tr.burn_in < 0 || tr.burn_in >= tr.iterations) r.fail("burn-in must lie in [0, iterations)");
  if (tr.n < 1 || tr.n > 64) r.fail("component count must lie in [1, 64]");
  if (tr.timepoints < 1) r.fail("timepoint count must be positive");
  if (r.expect("'#sweeps' header") != "#sweeps iteration,lambda,log_joint,kappa_accepted")
    r.fail("expected '#sweeps' header");
  tr.lambda_samples.reserve(tr.iterations);
  tr.log_joint.reserve(tr.iterations);
  tr.kappa_accepted.reserve(tr.iterations);
  for (int i = 0; i < tr.iterations; ++i) {
    const auto parts = split(r.expect("sweep row"), ',');
    if (parts.size() != 4) r.fail("sweep rows need 4 fields");
    if (parse_int(parts[0], r.context()) != i + 1) r.fail("sweep rows must be consecutive");
    tr.lambda_samples.push_back(parse_double(parts[1], r.context()));
    tr.log_joint.push_back(parse_double(parts[2], r.context()));
    const long long acc = parse_int(parts[3], r.context());
    if (acc != 0 && acc != 1) r.fail("kappa_accepted must be 0 or 1");
    tr.kappa_accepted.push_back(static_cast<std::uint8_t>(acc));
  }
  if (r.expect("'#edge-sums' header") != "#edge-sums t,from,to,count")
    r.fail("expected '#edge-sums' header");
  tr.edge_sums.assign(static_cast<std::size_t>(tr.timepoints) * tr.n * tr.n, 0);
  for (int t = 0; t < tr.timepoints; ++t) {
    for (int from = 0; from < tr.n; ++from) {
      for (int to = 0; to < tr.n; ++to) {
        const auto parts = split(r.expect("edge sum row"), ',');
        if (parts.size() != 4) r.fail("edge sum rows need 4 fields");
        if (parse_int(parts[0], r.context()) != t || parse_int(parts[1], r.context()) != from ||
            parse_int(parts[2], r.context()) != to)
          r.fail("edge sum rows must iterate (t, from, to) in order");
        const long long count = parse_int(parts[3], r.context());
        if (count < 0 || count > tr.kept()) r.fail("edge sum outside [0, kept sweeps]");
        tr.edge_sums[(static_cast<std::size_t>(t) * tr.n + from) * tr.n + to] =
            static_cast<std::uint32_t>(count);
      }
    }
  }
  std::string_view line;
  if (r.next(line)) {
    if (line != "#snapshots iteration,t,adjacency") r.fail("expected '#snapshots' header");
    PathSnapshot current;
    while (r.next(line)) {
      if (line.empty()) break;
      const auto parts = split(line, ',');
      if (parts.size() != 3) r.fail("snapshot rows need 3 fields");
      const int iter = static_cast<int>(parse_int(parts[0], r.context()));
      const int t = static_cast<int>(parse_int(parts[1], r.context()));
      if (parts[2].size() != static_cast<std::size_t>(tr.n) * tr.n)
        r.fail("snapshot adjacency has wrong length");
      if (t == 0) {
        if (!current.path.empty()) tr.snapshots.push_back(std::move(current));
        current = PathSnapshot{iter, {}};
      } else if (iter != current.iteration || static_cast<int>(current.path.size()) != t) {
        r.fail("snapshot rows out of order");
      }
      Network g(tr.n);
      for (int from = 0; from < tr.n; ++from)
        for (int to = 0; to < tr.n; ++to) {
          const char c = parts[2][static_cast<std::size_t>(from) * tr.n + to];
          if (c != '0' && c != '1') r.fail("snapshot adjacency must be 0/1");
          if (c == '1') {
            if (from == to) r.fail("snapshot diagonal must be 0");
            g.set_edge(from, to, true);
          }
        }
      current.path.push_back(std::move(g));
    }
    if (!current.path.empty()) tr.snapshots.push_back(std::move(current));
    for (const auto& snap : tr.snapshots)
      if (static_cast<int>(snap.path.size()) != tr.timepoints)
        r.fail("snapshot does not cover every timepoint");
  }
  return tr;
}

inline Trace read_trace(const std::string& path) {
  return parse_trace(read_file(path), path);
}

}  // namespace hmnem

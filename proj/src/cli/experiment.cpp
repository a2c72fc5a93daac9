#include "sf/experiment.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <variant>

namespace sf {

ConfigError::ConfigError(std::string source, std::size_t line, std::string field,
                         const std::string& message)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) +
                         ": " + (field.empty() ? std::string() : "field '" + field + "': ") +
                         message),
      line_(line),
      field_(std::move(field)) {}

namespace {

// Scalars and single-line arrays of scalars; that is all experiment files use.
struct Value {
  using Scalar = std::variant<std::string, std::int64_t, double, bool>;
  std::vector<Scalar> items;
  bool array = false;
  std::size_t line = 0;
};

struct Entry {
  std::string key;
  Value value;
};

using Document = std::map<std::string, std::vector<Entry>>;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> known = {
      {"experiment", {"name", "dataset", "out"}},
      {"grid", {"batch", "width", "norm_mode", "seed"}},
      {"train",
       {"depth", "latent_dim", "g_width", "sr_fraction", "n_critic", "lr", "beta1", "beta2",
        "iterations", "snapshot_every", "eval_samples"}},
      {"monitor", {"tau", "threshold", "window", "radius_sigmas"}},
  };
  return known;
}

class Parser {
 public:
  Parser(const std::string& text, const std::string& source) : text_(text), source_(source) {}

  Document parse() {
    Document doc;
    std::string section;
    std::set<std::string> seen_sections;
    std::istringstream in(text_);
    std::string raw;
    while (std::getline(in, raw)) {
      ++line_;
      const std::string content = trim(strip_comment(raw));
      if (content.empty()) continue;
      if (content.front() == '[') {
        if (content.back() != ']') fail("", "unterminated section header");
        section = trim(std::string_view(content).substr(1, content.size() - 2));
        if (section.empty()) fail("", "empty section name");
        if (!schema().contains(section))
          fail(section, "unknown section (expected experiment, grid, train or monitor)");
        if (!seen_sections.insert(section).second) fail(section, "duplicate section");
        doc[section];
        continue;
      }
      const auto eq = content.find('=');
      if (eq == std::string::npos) fail("", "expected 'key = value'");
      const std::string key = trim(std::string_view(content).substr(0, eq));
      if (key.empty()) fail("", "missing key before '='");
      if (section.empty()) fail(key, "key outside of any section");
      for (const auto& e : doc[section])
        if (e.key == key) fail(key, "duplicate key");
      pos_ = 0;
      rest_ = trim(std::string_view(content).substr(eq + 1));
      Value v = value(key);
      skip_ws();
      if (pos_ != rest_.size()) fail(key, "unexpected trailing text '" + rest_.substr(pos_) + "'");
      v.line = line_;
      doc[section].push_back({key, std::move(v)});
    }
    return doc;
  }

  [[noreturn]] void fail(const std::string& field, const std::string& msg) const {
    throw ConfigError(source_, line_, field, msg);
  }

 private:
  static std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '\\' && quoted) {
        ++i;
      } else if (line[i] == '"') {
        quoted = !quoted;
      } else if (line[i] == '#' && !quoted) {
        return line.substr(0, i);
      }
    }
    return line;
  }

  void skip_ws() {
    while (pos_ < rest_.size() && (rest_[pos_] == ' ' || rest_[pos_] == '\t')) ++pos_;
  }

  Value value(const std::string& key) {
    Value v;
    skip_ws();
    if (pos_ < rest_.size() && rest_[pos_] == '[') {
      v.array = true;
      ++pos_;
      skip_ws();
      if (pos_ < rest_.size() && rest_[pos_] == ']') {
        ++pos_;
        return v;
      }
      while (true) {
        v.items.push_back(scalar(key));
        skip_ws();
        if (pos_ >= rest_.size()) fail(key, "unterminated array");
        if (rest_[pos_] == ']') {
          ++pos_;
          break;
        }
        if (rest_[pos_] != ',') fail(key, "expected ',' or ']' in array");
        ++pos_;
        skip_ws();
        if (pos_ < rest_.size() && rest_[pos_] == ']') {
          ++pos_;
          break;
        }
      }
      return v;
    }
    v.items.push_back(scalar(key));
    return v;
  }

  Value::Scalar scalar(const std::string& key) {
    skip_ws();
    if (pos_ >= rest_.size()) fail(key, "missing value");
    if (rest_[pos_] == '"') {
      std::string out;
      ++pos_;
      while (pos_ < rest_.size() && rest_[pos_] != '"') {
        char c = rest_[pos_++];
        if (c == '\\') {
          if (pos_ >= rest_.size()) break;
          const char esc = rest_[pos_++];
          switch (esc) {
            case '"': c = '"'; break;
            case '\\': c = '\\'; break;
            case 'n': c = '\n'; break;
            case 't': c = '\t'; break;
            default: fail(key, std::string("unsupported escape '\\") + esc + "'");
          }
        }
        out.push_back(c);
      }
      if (pos_ >= rest_.size()) fail(key, "unterminated string");
      ++pos_;
      return out;
    }
    std::size_t end = pos_;
    while (end < rest_.size() && rest_[end] != ',' && rest_[end] != ']' && rest_[end] != ' ' &&
           rest_[end] != '\t')
      ++end;
    const std::string token = rest_.substr(pos_, end - pos_);
    pos_ = end;
    if (token == "true") return true;
    if (token == "false") return false;
    const bool floating = token.find_first_of(".eE") != std::string::npos ||
                          token == "inf" || token == "nan";
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (!token.empty() && token.front() == '+') ++first;
    if (floating) {
      double d = 0.0;
      auto [p, ec] = std::from_chars(first, last, d);
      if (ec == std::errc() && p == last) return d;
    } else {
      std::int64_t i = 0;
      auto [p, ec] = std::from_chars(first, last, i);
      if (ec == std::errc() && p == last) return i;
    }
    fail(key, "cannot parse value '" + token + "'");
  }

  const std::string& text_;
  const std::string& source_;
  std::size_t line_ = 0;
  std::string rest_;
  std::size_t pos_ = 0;
};

// Typed access to a parsed entry, with diagnostics that keep the line.
class Field {
 public:
  Field(const std::string& source, const Entry& e) : source_(source), e_(e) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(source_, e_.value.line, e_.key, msg);
  }

  const Value::Scalar& single() const {
    if (e_.value.array || e_.value.items.size() != 1) fail("expected a single value");
    return e_.value.items.front();
  }

  std::vector<Value::Scalar> list() const {
    if (e_.value.items.empty()) fail("must not be empty");
    return e_.value.items;
  }

  std::string string(const Value::Scalar& s) const {
    if (auto p = std::get_if<std::string>(&s)) return *p;
    fail("expected a string");
  }

  double number(const Value::Scalar& s) const {
    if (auto p = std::get_if<double>(&s)) return *p;
    if (auto p = std::get_if<std::int64_t>(&s)) return static_cast<double>(*p);
    fail("expected a number");
  }

  std::size_t count(const Value::Scalar& s) const {
    auto p = std::get_if<std::int64_t>(&s);
    if (!p) fail("expected an integer");
    if (*p <= 0) fail("must be positive, got " + std::to_string(*p));
    return static_cast<std::size_t>(*p);
  }

  std::size_t non_negative(const Value::Scalar& s) const {
    auto p = std::get_if<std::int64_t>(&s);
    if (!p) fail("expected an integer");
    if (*p < 0) fail("must be non-negative, got " + std::to_string(*p));
    return static_cast<std::size_t>(*p);
  }

  std::uint64_t seed(const Value::Scalar& s) const {
    auto p = std::get_if<std::int64_t>(&s);
    if (!p) fail("expected an integer");
    if (*p < 0) fail("must be non-negative, got " + std::to_string(*p));
    return static_cast<std::uint64_t>(*p);
  }

  NormMode norm_mode(const Value::Scalar& s) const {
    try {
      return parse_norm_mode(string(s));
    } catch (const std::invalid_argument&) {
      fail("unknown value '" + string(s) + "' (expected none, sn, sr-static or sr-dynamic)");
    }
  }

 private:
  const std::string& source_;
  const Entry& e_;
};

std::string shortest(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  std::string s(buf, p);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out + "\"";
}

}  // namespace

ExperimentFile parse_experiment(const std::string& text, const std::string& source) {
  Parser parser(text, source);
  const Document doc = parser.parse();

  const auto& known = schema();

  ExperimentFile file;
  TrainConfig& c = file.base;
  std::size_t first_line = 0;
  for (const auto& [section, entries] : doc) {
    const auto k = known.find(section);
    for (const auto& e : entries) {
      if (!k->second.count(e.key))
        throw ConfigError(source, e.value.line, e.key, "unknown key in [" + section + "]");
      const Field f(source, e);
      if (first_line == 0 || e.value.line < first_line) first_line = e.value.line;
      if (section == "experiment") {
        if (e.key == "name") {
          file.name = f.string(f.single());
          if (file.name.empty() || file.name.find_first_of("/\\") != std::string::npos)
            f.fail("must be a non-empty name without path separators");
        } else if (e.key == "dataset") {
          try {
            c.dataset = MixtureSpec::preset(f.string(f.single()));
          } catch (const std::invalid_argument& ex) {
            f.fail(ex.what());
          }
        } else {
          file.out_dir = f.string(f.single());
        }
      } else if (section == "grid") {
        for (const auto& s : f.list()) {
          if (e.key == "batch") file.batches.push_back(f.count(s));
          else if (e.key == "width") file.widths.push_back(f.count(s));
          else if (e.key == "norm_mode") file.norm_modes.push_back(f.norm_mode(s));
          else file.seeds.push_back(f.seed(s));
        }
      } else if (section == "train") {
        const auto& s = f.single();
        if (e.key == "depth") c.depth = f.count(s);
        else if (e.key == "latent_dim") c.latent_dim = f.count(s);
        else if (e.key == "g_width") c.g_width = f.count(s);
        else if (e.key == "n_critic") c.n_critic = f.count(s);
        else if (e.key == "iterations") c.iterations = f.non_negative(s);
        else if (e.key == "snapshot_every") c.snapshot_every = f.count(s);
        else if (e.key == "eval_samples") c.eval_samples = f.count(s);
        else if (e.key == "sr_fraction") c.sr_fraction = f.number(s);
        else if (e.key == "lr") c.lr = f.number(s);
        else if (e.key == "beta1") c.beta1 = f.number(s);
        else c.beta2 = f.number(s);
      } else {
        const auto& s = f.single();
        if (e.key == "window") c.monitor.window = f.count(s);
        else if (e.key == "tau") c.monitor.tau = f.number(s);
        else if (e.key == "threshold") c.monitor.threshold = f.number(s);
        else c.monitor.radius_sigmas = f.number(s);
      }
    }
  }

  if (file.batches.empty()) file.batches = {c.batch};
  if (file.widths.empty()) file.widths = {c.width};
  if (file.norm_modes.empty()) file.norm_modes = {c.norm_mode};
  if (file.seeds.empty()) file.seeds = {c.seed};
  c.batch = file.batches.front();
  c.width = file.widths.front();
  c.norm_mode = file.norm_modes.front();
  c.seed = file.seeds.front();

  try {
    c.validate();
  } catch (const std::invalid_argument& ex) {
    // validate() messages start with the field name.
    const std::string msg = ex.what();
    const auto colon = msg.find(':');
    const std::string field = colon == std::string::npos ? std::string() : msg.substr(0, colon);
    std::size_t line = 0;
    for (const auto& [section, entries] : doc)
      for (const auto& e : entries)
        if (e.key == field) line = e.value.line;
    throw ConfigError(source, line, field,
                      colon == std::string::npos ? msg : trim(msg.substr(colon + 1)));
  }
  if (!(c.monitor.threshold > 0.0 && c.monitor.threshold <= 1.0)) {
    std::size_t line = 0;
    if (auto it = doc.find("monitor"); it != doc.end())
      for (const auto& e : it->second)
        if (e.key == "threshold") line = e.value.line;
    throw ConfigError(source, line, "threshold", "must lie in (0, 1]");
  }
  return file;
}

ExperimentFile load_experiment(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, 0, "", "cannot open experiment file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_experiment(ss.str(), path);
}

std::string cell_name(const TrainConfig& c) {
  return to_string(c.norm_mode) + "_b" + std::to_string(c.batch) + "_w" +
         std::to_string(c.width) + "_s" + std::to_string(c.seed);
}

std::vector<CellConfig> expand_grid(const ExperimentFile& file, std::int64_t seed_offset) {
  std::vector<CellConfig> cells;
  for (NormMode mode : file.norm_modes)
    for (std::size_t batch : file.batches)
      for (std::size_t width : file.widths)
        for (std::uint64_t seed : file.seeds) {
          TrainConfig c = file.base;
          c.norm_mode = mode;
          c.batch = batch;
          c.width = width;
          c.seed = seed + static_cast<std::uint64_t>(seed_offset);
          cells.push_back({cell_name(c), c});
        }
  return cells;
}

std::string echo_config(const std::string& name, const TrainConfig& c) {
  std::ostringstream o;
  o << "# schema=1\n"
    << "[experiment]\n"
    << "name = " << quoted(name) << "\n"
    << "dataset = " << quoted(c.dataset.name) << "\n\n"
    << "[grid]\n"
    << "batch = [" << c.batch << "]\n"
    << "width = [" << c.width << "]\n"
    << "norm_mode = [" << quoted(to_string(c.norm_mode)) << "]\n"
    << "seed = [" << c.seed << "]\n\n"
    << "[train]\n"
    << "depth = " << c.depth << "\n"
    << "latent_dim = " << c.latent_dim << "\n"
    << "g_width = " << c.g_width << "\n"
    << "sr_fraction = " << shortest(c.sr_fraction) << "\n"
    << "n_critic = " << c.n_critic << "\n"
    << "lr = " << shortest(c.lr) << "\n"
    << "beta1 = " << shortest(c.beta1) << "\n"
    << "beta2 = " << shortest(c.beta2) << "\n"
    << "iterations = " << c.iterations << "\n"
    << "snapshot_every = " << c.snapshot_every << "\n"
    << "eval_samples = " << c.eval_samples << "\n\n"
    << "[monitor]\n"
    << "tau = " << shortest(c.monitor.tau) << "\n"
    << "threshold = " << shortest(c.monitor.threshold) << "\n"
    << "window = " << c.monitor.window << "\n"
    << "radius_sigmas = " << shortest(c.monitor.radius_sigmas) << "\n";
  return o.str();
}

std::int64_t seed_offset_from_env() {
  const char* raw = std::getenv("SF_SEED_OFFSET");
  if (!raw || !*raw) return 0;
  const std::string s = trim(raw);
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError("SF_SEED_OFFSET", 0, "SF_SEED_OFFSET", "expected an integer, got '" + s + "'");
  return v;
}

}  // namespace sf

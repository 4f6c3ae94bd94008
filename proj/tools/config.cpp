#include "config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace sidekit::cli {

namespace {

std::string describe(const std::string& what, int line, const std::string& key)
{
    std::ostringstream os;
    if (line > 0) {
        os << "line " << line << ": ";
    }
    if (!key.empty()) {
        os << "key '" << key << "': ";
    }
    os << what;
    return os.str();
}

std::string trim(const std::string& s)
{
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    return s.substr(b, e - b);
}

struct Entry {
    std::string value;
    int line = 0;
};

class ValueParser {
public:
    ValueParser(const std::string& text, int line, std::string key)
        : s_(text), line_(line), key_(std::move(key))
    {
    }

    double number()
    {
        skip();
        const char* first = s_.data() + pos_;
        const char* last = s_.data() + s_.size();
        if (first != last && *first == '+') {
            ++first;
        }
        double v = 0.0;
        const auto res = std::from_chars(first, last, v);
        if (res.ec != std::errc{}) {
            fail("expected a number");
        }
        pos_ = static_cast<std::size_t>(res.ptr - s_.data());
        return v;
    }

    std::vector<double> row()
    {
        expect('[');
        std::vector<double> out;
        skip();
        if (peek() == ']') {
            ++pos_;
            return out;
        }
        for (;;) {
            out.push_back(number());
            skip();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            expect(']');
            return out;
        }
    }

    std::vector<std::vector<double>> rows()
    {
        expect('[');
        std::vector<std::vector<double>> out;
        for (;;) {
            out.push_back(row());
            skip();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            expect(']');
            return out;
        }
    }

    void finish()
    {
        skip();
        if (pos_ != s_.size()) {
            fail("unexpected trailing text '" + s_.substr(pos_) + "'");
        }
    }

    [[noreturn]] void fail(const std::string& what) const { throw ConfigError(what, line_, key_); }

private:
    void skip()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) {
            ++pos_;
        }
    }
    char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
    void expect(char c)
    {
        skip();
        if (peek() != c) {
            fail(std::string("expected '") + c + "'");
        }
        ++pos_;
    }

    const std::string& s_;
    std::size_t pos_ = 0;
    int line_;
    std::string key_;
};

double parse_number(const Entry& e, const std::string& key)
{
    ValueParser p(e.value, e.line, key);
    const double v = p.number();
    p.finish();
    return v;
}

std::uint64_t parse_count(const Entry& e, const std::string& key)
{
    std::uint64_t v = 0;
    const char* first = e.value.data();
    const char* last = first + e.value.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last) {
        throw ConfigError("expected a non-negative integer", e.line, key);
    }
    return v;
}

bool parse_bool(const Entry& e, const std::string& key)
{
    if (e.value == "true" || e.value == "1" || e.value == "yes") {
        return true;
    }
    if (e.value == "false" || e.value == "0" || e.value == "no") {
        return false;
    }
    throw ConfigError("expected true or false", e.line, key);
}

Vec parse_vector(const Entry& e, const std::string& key)
{
    ValueParser p(e.value, e.line, key);
    Vec v;
    if (trim(e.value).rfind('[', 0) == 0) {
        const auto r = p.row();
        v = Eigen::Map<const Vec>(r.data(), static_cast<Index>(r.size()));
    } else {
        v = Vec::Constant(1, p.number());
    }
    p.finish();
    if (v.size() == 0) {
        throw ConfigError("empty vector", e.line, key);
    }
    return v;
}

std::vector<std::int64_t> parse_int_list(const Entry& e, const std::string& key)
{
    ValueParser p(e.value, e.line, key);
    const auto r = p.row();
    p.finish();
    std::vector<std::int64_t> out;
    for (double v : r) {
        if (v != static_cast<double>(static_cast<std::int64_t>(v))) {
            p.fail("levels must be integers");
        }
        out.push_back(static_cast<std::int64_t>(v));
    }
    return out;
}

Mat parse_matrix(const Entry& e, const std::string& key)
{
    ValueParser p(e.value, e.line, key);
    const auto r = p.rows();
    p.finish();
    const auto cols = r.front().size();
    if (cols == 0) {
        p.fail("empty matrix row");
    }
    Mat m(static_cast<Index>(r.size()), static_cast<Index>(cols));
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i].size() != cols) {
            p.fail("ragged matrix rows");
        }
        for (std::size_t j = 0; j < cols; ++j) {
            m(static_cast<Index>(i), static_cast<Index>(j)) = r[i][j];
        }
    }
    return m;
}

std::string shortest(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string matrix_text(const Mat& m)
{
    std::string s = "[";
    for (Index i = 0; i < m.rows(); ++i) {
        s += i ? ", [" : "[";
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) {
                s += ", ";
            }
            s += shortest(m(i, j));
        }
        s += "]";
    }
    return s + "]";
}

std::string vector_text(const Vec& v)
{
    std::string s = "[";
    for (Index i = 0; i < v.size(); ++i) {
        if (i) {
            s += ", ";
        }
        s += shortest(v(i));
    }
    return s + "]";
}

bool same(const Mat& a, const Mat& b)
{
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

bool same(const std::optional<Mat>& a, const std::optional<Mat>& b)
{
    return a.has_value() == b.has_value() && (!a || same(*a, *b));
}

bool same(const std::optional<Vec>& a, const std::optional<Vec>& b)
{
    return a.has_value() == b.has_value() && (!a || (a->size() == b->size() && *a == *b));
}

} // namespace

ConfigError::ConfigError(const std::string& what, int line, std::string key)
    : std::runtime_error(describe(what, line, key)), line_(line), key_(std::move(key))
{
}

std::string task_name(Task t)
{
    switch (t) {
    case Task::Simulate:
        return "simulate";
    case Task::Analyze:
        return "analyze";
    case Task::MaxStepsize:
        return "max-stepsize";
    case Task::Exponent:
        return "exponent";
    case Task::Converge:
        return "converge";
    case Task::CpsDemo:
        return "cps-demo";
    }
    return "?";
}

std::optional<Task> parse_task(const std::string& name)
{
    for (Task t : {Task::Simulate, Task::Analyze, Task::MaxStepsize, Task::Exponent, Task::Converge,
                   Task::CpsDemo}) {
        if (task_name(t) == name) {
            return t;
        }
    }
    return std::nullopt;
}

bool operator==(const RunConfig& a, const RunConfig& b)
{
    const auto& sa = a.system;
    const auto& sb = b.system;
    if (!same(sa.f, sb.f) || sa.g.size() != sb.g.size() || !same(sa.x0, sb.x0)) {
        return false;
    }
    for (std::size_t j = 0; j < sa.g.size(); ++j) {
        if (!same(sa.g[j], sb.g[j])) {
            return false;
        }
    }
    const auto& na = a.numeric;
    const auto& nb = b.numeric;
    return sa.lambda == sb.lambda && sa.mu == sb.mu && sa.a == sb.a && sa.k_p == sb.k_p &&
           a.task == b.task && na.dt == nb.dt && na.dt_bar == nb.dt_bar &&
           na.horizon == nb.horizon && na.p == nb.p && na.tol == nb.tol &&
           na.window == nb.window && na.seed == nb.seed && na.trajectories == nb.trajectories &&
           na.inner_substeps == nb.inner_substeps && na.refinement == nb.refinement &&
           na.threads == nb.threads && na.levels == nb.levels &&
           na.impulse_noise == nb.impulse_noise && na.integration == nb.integration &&
           a.output.dir == b.output.dir && a.output.substeps == b.output.substeps;
}

RunConfig parse_config(const std::string& text)
{
    // section -> key -> entry
    std::map<std::string, std::map<std::string, Entry>> sections;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto cut = raw.find_first_of("#;");
        const std::string line = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[' && line.find('=') == std::string::npos) {
            if (line.back() != ']') {
                throw ConfigError("unterminated section header", line_no);
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section != "system" && section != "task" && section != "numeric" &&
                section != "output") {
                throw ConfigError("unknown section [" + section + "]", line_no);
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("expected key = value", line_no);
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("empty key", line_no);
        }
        if (section.empty()) {
            throw ConfigError("key outside of any section", line_no, key);
        }
        if (value.empty()) {
            throw ConfigError("empty value", line_no, key);
        }
        auto& keys = sections[section];
        if (keys.count(key)) {
            throw ConfigError("duplicate key (first on line " + std::to_string(keys[key].line) + ")",
                              line_no, key);
        }
        keys[key] = Entry{value, line_no};
    }

    RunConfig cfg;
    for (const auto& [key, e] : sections["system"]) {
        auto& s = cfg.system;
        if (key == "F") {
            s.f = parse_matrix(e, key);
        } else if (key.size() > 1 && key[0] == 'G' &&
                   key.find_first_not_of("0123456789", 1) == std::string::npos) {
            continue; // collected below, in index order
        } else if (key == "lambda") {
            s.lambda = parse_number(e, key);
        } else if (key == "mu") {
            s.mu = parse_number(e, key);
        } else if (key == "a") {
            s.a = parse_number(e, key);
        } else if (key == "k_p") {
            s.k_p = parse_number(e, key);
        } else if (key == "x0") {
            s.x0 = parse_vector(e, key);
        } else {
            throw ConfigError("unknown key in [system]", e.line, key);
        }
    }
    {
        auto& sys = sections["system"];
        std::size_t found = 0;
        for (const auto& [key, e] : sys) {
            if (key.size() > 1 && key[0] == 'G' &&
                key.find_first_not_of("0123456789", 1) == std::string::npos) {
                ++found;
            }
        }
        for (std::size_t j = 1; j <= found; ++j) {
            const std::string key = "G" + std::to_string(j);
            const auto it = sys.find(key);
            if (it == sys.end()) {
                // report a key that lies past the contiguous range
                for (const auto& [other, e] : sys) {
                    if (other.size() > 1 && other[0] == 'G' &&
                        other.find_first_not_of("0123456789", 1) == std::string::npos &&
                        std::stoul(other.substr(1)) > found) {
                        throw ConfigError("noise matrices must be numbered G1..G" +
                                              std::to_string(found) + " without gaps",
                                          e.line, other);
                    }
                }
                throw ConfigError("noise matrices must be numbered from G1", 0, key);
            }
            cfg.system.g.push_back(parse_matrix(it->second, key));
        }
    }
    for (const auto& [key, e] : sections["task"]) {
        if (key != "kind") {
            throw ConfigError("unknown key in [task]", e.line, key);
        }
        cfg.task = parse_task(e.value);
        if (!cfg.task) {
            throw ConfigError("unknown task '" + e.value + "'", e.line, key);
        }
    }
    for (const auto& [key, e] : sections["numeric"]) {
        auto& n = cfg.numeric;
        if (key == "dt") {
            n.dt = parse_number(e, key);
        } else if (key == "dt_bar") {
            n.dt_bar = parse_number(e, key);
        } else if (key == "T") {
            n.horizon = parse_number(e, key);
        } else if (key == "p") {
            n.p = parse_number(e, key);
        } else if (key == "tol") {
            n.tol = parse_number(e, key);
        } else if (key == "window") {
            n.window = parse_number(e, key);
        } else if (key == "seed") {
            n.seed = parse_count(e, key);
        } else if (key == "trajectories") {
            n.trajectories = parse_count(e, key);
        } else if (key == "inner_substeps") {
            n.inner_substeps = parse_count(e, key);
        } else if (key == "refinement") {
            n.refinement = parse_count(e, key);
        } else if (key == "threads") {
            n.threads = parse_count(e, key);
        } else if (key == "levels") {
            n.levels = parse_int_list(e, key);
        } else if (key == "impulse_noise") {
            if (e.value != "xi" && e.value != "brownian") {
                throw ConfigError("expected xi or brownian", e.line, key);
            }
            n.impulse_noise = e.value;
        } else if (key == "integration") {
            if (e.value != "identity" && e.value != "separate") {
                throw ConfigError("expected identity or separate", e.line, key);
            }
            n.integration = e.value;
        } else {
            throw ConfigError("unknown key in [numeric]", e.line, key);
        }
    }
    for (const auto& [key, e] : sections["output"]) {
        if (key == "dir") {
            cfg.output.dir = e.value;
        } else if (key == "substeps") {
            cfg.output.substeps = parse_bool(e, key);
        } else {
            throw ConfigError("unknown key in [output]", e.line, key);
        }
    }

    const auto& s = cfg.system;
    if (s.f) {
        if (s.f->rows() != s.f->cols()) {
            throw ConfigError("F must be square", sections["system"]["F"].line, "F");
        }
        for (std::size_t j = 0; j < s.g.size(); ++j) {
            if (s.g[j].rows() != s.f->rows() || s.g[j].cols() != s.f->cols()) {
                const std::string key = "G" + std::to_string(j + 1);
                throw ConfigError("dimension does not match F", sections["system"][key].line, key);
            }
        }
        if (s.lambda || s.mu) {
            throw ConfigError("give either F/G matrices or lambda/mu, not both",
                              sections["system"]["F"].line, "F");
        }
    } else if (!s.g.empty()) {
        throw ConfigError("noise matrices given without F", sections["system"]["G1"].line, "G1");
    }
    return cfg;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string dump_config(const RunConfig& cfg)
{
    std::ostringstream os;
    const auto& s = cfg.system;
    os << "[system]\n";
    if (s.f) {
        os << "F = " << matrix_text(*s.f) << '\n';
    }
    for (std::size_t j = 0; j < s.g.size(); ++j) {
        os << 'G' << j + 1 << " = " << matrix_text(s.g[j]) << '\n';
    }
    auto scalar = [&os](const char* key, const std::optional<double>& v) {
        if (v) {
            os << key << " = " << shortest(*v) << '\n';
        }
    };
    auto count = [&os](const char* key, const std::optional<std::uint64_t>& v) {
        if (v) {
            os << key << " = " << *v << '\n';
        }
    };
    scalar("lambda", s.lambda);
    scalar("mu", s.mu);
    scalar("a", s.a);
    scalar("k_p", s.k_p);
    if (s.x0) {
        os << "x0 = " << vector_text(*s.x0) << '\n';
    }

    if (cfg.task) {
        os << "\n[task]\nkind = " << task_name(*cfg.task) << '\n';
    }

    const auto& n = cfg.numeric;
    os << "\n[numeric]\n";
    scalar("dt", n.dt);
    scalar("dt_bar", n.dt_bar);
    scalar("T", n.horizon);
    scalar("p", n.p);
    scalar("tol", n.tol);
    scalar("window", n.window);
    count("seed", n.seed);
    count("trajectories", n.trajectories);
    count("inner_substeps", n.inner_substeps);
    count("refinement", n.refinement);
    count("threads", n.threads);
    if (!n.levels.empty()) {
        os << "levels = [";
        for (std::size_t i = 0; i < n.levels.size(); ++i) {
            os << (i ? ", " : "") << n.levels[i];
        }
        os << "]\n";
    }
    if (n.impulse_noise) {
        os << "impulse_noise = " << *n.impulse_noise << '\n';
    }
    if (n.integration) {
        os << "integration = " << *n.integration << '\n';
    }

    if (cfg.output.dir || cfg.output.substeps) {
        os << "\n[output]\n";
        if (cfg.output.dir) {
            os << "dir = " << *cfg.output.dir << '\n';
        }
        if (cfg.output.substeps) {
            os << "substeps = " << (*cfg.output.substeps ? "true" : "false") << '\n';
        }
    }
    return os.str();
}

LinearSde linear_system(const RunConfig& cfg)
{
    const auto& s = cfg.system;
    if (s.f) {
        return LinearSde(*s.f, s.g);
    }
    if (s.lambda) {
        return LinearSde::scalar(*s.lambda, s.mu.value_or(0.0));
    }
    throw ConfigError("missing key 'F' (or 'lambda') in [system]", 0, "F");
}

Vec initial_state(const RunConfig& cfg, Index n)
{
    if (!cfg.system.x0) {
        return Vec::Ones(n);
    }
    if (cfg.system.x0->size() != n) {
        throw ConfigError("x0 has " + std::to_string(cfg.system.x0->size()) +
                              " entries, the system has dimension " + std::to_string(n),
                          0, "x0");
    }
    return *cfg.system.x0;
}

} // namespace sidekit::cli

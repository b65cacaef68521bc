#include "branchlab/model_io.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "branchlab/error.hpp"
#include "branchlab/version.hpp"

namespace branchlab {
namespace {

using nlohmann::json;

const json& require(const json& j, const char* key, const std::string& where) {
    if (!j.is_object()) throw Error("parse error: " + where + ": expected an object");
    auto it = j.find(key);
    if (it == j.end())
        throw Error("parse error: " + where + ": missing field '" + key + "'");
    return *it;
}

Vec number_array(const json& j, const std::string& where) {
    if (!j.is_array()) throw Error("parse error: " + where + ": expected an array of numbers");
    Vec out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number())
            throw Error("parse error: " + where + "[" + std::to_string(i) + "]: expected a number");
        out.push_back(j[i].get<double>());
    }
    return out;
}

std::vector<std::uint64_t> count_array(const json& j, const std::string& where) {
    if (!j.is_array()) throw Error("parse error: " + where + ": expected an array of counts");
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string at = where + "[" + std::to_string(i) + "]";
        if (!j[i].is_number_integer() || j[i].get<double>() < 0)
            throw Error("parse error: " + at + ": expected a nonnegative integer");
        out.push_back(j[i].get<std::uint64_t>());
    }
    return out;
}

Law law_from_json(const json& j, const std::string& where) {
    const json& kind = require(j, "kind", where);
    if (!kind.is_string()) throw Error("parse error: " + where + ".kind: expected a string");
    const std::string k = kind.get<std::string>();
    if (k == "poisson") return poisson_law(number_array(require(j, "means", where), where + ".means"));
    if (k == "bernoulli")
        return bernoulli_law(number_array(require(j, "probs", where), where + ".probs"));
    if (k == "finite") {
        const json& atoms = require(j, "atoms", where);
        if (!atoms.is_array() || atoms.empty())
            throw Error("parse error: " + where + ".atoms: expected a non-empty array");
        std::vector<std::vector<std::uint64_t>> counts;
        Vec probs;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            const std::string at = where + ".atoms[" + std::to_string(i) + "]";
            const json& a = atoms[i];
            if (a.is_object()) {
                counts.push_back(count_array(require(a, "counts", at), at + ".counts"));
                const json& pr = require(a, "prob", at);
                if (!pr.is_number()) throw Error("parse error: " + at + ".prob: expected a number");
                probs.push_back(pr.get<double>());
            } else if (a.is_array() && a.size() == 2 && a[0].is_array() && a[1].is_number()) {
                counts.push_back(count_array(a[0], at + "[0]"));
                probs.push_back(a[1].get<double>());
            } else {
                throw Error("parse error: " + at +
                            ": expected {counts, prob} or [[counts...], prob]");
            }
        }
        return finite_law(std::move(counts), std::move(probs));
    }
    throw Error("parse error: " + where + ".kind: unknown law kind '" + k + "'");
}

BranchingModel model_from_json(const json& root) {
    if (!root.is_object()) throw Error("parse error: model: expected a top-level object");
    const json& off = require(root, "offspring", "model");
    if (!off.is_array() || off.empty())
        throw Error("parse error: model.offspring: expected a non-empty array");
    std::vector<Law> offspring;
    for (std::size_t i = 0; i < off.size(); ++i)
        offspring.push_back(law_from_json(off[i], "offspring[" + std::to_string(i) + "]"));
    Law immigration = law_from_json(require(root, "immigration", "model"), "immigration");
    std::string name;
    if (auto it = root.find("name"); it != root.end()) {
        if (!it->is_string()) throw Error("parse error: model.name: expected a string");
        name = it->get<std::string>();
    }
    if (auto it = root.find("p"); it != root.end()) {
        if (!it->is_number_integer() || it->get<std::int64_t>() != static_cast<std::int64_t>(off.size()))
            throw Error("parse error: model.p: must equal the number of offspring laws (" +
                        std::to_string(off.size()) + ")");
    }
    return build_model(std::move(offspring), std::move(immigration), std::move(name));
}

// ---------------------------------------------------------------------------
// TOML subset: tables, arrays of tables, bare keys, strings, numbers,
// booleans, (possibly nested, possibly multiline) arrays. Enough to mirror
// the JSON schema; anything fancier is rejected with the offending line.
// ---------------------------------------------------------------------------

struct TomlCursor {
    const std::string& s;
    std::size_t pos = 0;
    std::size_t line;

    [[noreturn]] void fail(const std::string& msg) const {
        throw Error("parse error: line " + std::to_string(line) + ": " + msg);
    }
    void skip_ws() {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    }
    bool done() {
        skip_ws();
        return pos >= s.size();
    }
};

json toml_value(TomlCursor& c);

json toml_array(TomlCursor& c) {
    json arr = json::array();
    ++c.pos;  // consume '['
    for (;;) {
        c.skip_ws();
        if (c.pos >= c.s.size()) c.fail("unterminated array");
        if (c.s[c.pos] == ']') {
            ++c.pos;
            return arr;
        }
        arr.push_back(toml_value(c));
        c.skip_ws();
        if (c.pos < c.s.size() && c.s[c.pos] == ',') {
            ++c.pos;
            continue;
        }
        if (c.pos < c.s.size() && c.s[c.pos] == ']') {
            ++c.pos;
            return arr;
        }
        c.fail("expected ',' or ']' in array");
    }
}

json toml_value(TomlCursor& c) {
    c.skip_ws();
    if (c.pos >= c.s.size()) c.fail("missing value");
    const char ch = c.s[c.pos];
    if (ch == '[') return toml_array(c);
    if (ch == '"') {
        std::string out;
        ++c.pos;
        while (c.pos < c.s.size() && c.s[c.pos] != '"') {
            if (c.s[c.pos] == '\\' && c.pos + 1 < c.s.size()) ++c.pos;
            out.push_back(c.s[c.pos++]);
        }
        if (c.pos >= c.s.size()) c.fail("unterminated string");
        ++c.pos;
        return json(out);
    }
    std::size_t start = c.pos;
    while (c.pos < c.s.size() && c.s[c.pos] != ',' && c.s[c.pos] != ']' && c.s[c.pos] != ' ' &&
           c.s[c.pos] != '\t')
        ++c.pos;
    const std::string tok = c.s.substr(start, c.pos - start);
    if (tok == "true") return json(true);
    if (tok == "false") return json(false);
    if (tok.empty()) c.fail("missing value");
    try {
        std::size_t used = 0;
        if (tok.find_first_of(".eE") == std::string::npos) {
            const long long v = std::stoll(tok, &used);
            if (used == tok.size()) return json(v);
        } else {
            const double v = std::stod(tok, &used);
            if (used == tok.size()) return json(v);
        }
    } catch (const std::exception&) {
    }
    c.fail("cannot parse value '" + tok + "'");
}

std::string strip_toml_comment(const std::string& line) {
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
        if (line[i] == '#' && !in_str) return line.substr(0, i);
    }
    return line;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_path(const std::string& s, std::size_t line) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : s) {
        if (ch == '.') {
            if (cur.empty())
                throw Error("parse error: line " + std::to_string(line) + ": empty key segment");
            parts.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (trim(cur).empty())
        throw Error("parse error: line " + std::to_string(line) + ": empty key segment");
    parts.push_back(trim(cur));
    return parts;
}

json toml_to_json(const std::string& text) {
    json root = json::object();
    json* table = &root;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(strip_toml_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            const bool aot = line.size() > 1 && line[1] == '[';
            const std::string close = aot ? "]]" : "]";
            if (line.substr(line.size() - close.size()) != close)
                throw Error("parse error: line " + std::to_string(line_no) +
                            ": unterminated table header");
            const std::string inner =
                trim(line.substr(aot ? 2 : 1, line.size() - 2 * (aot ? 2 : 1)));
            json* node = &root;
            const auto parts = split_path(inner, line_no);
            for (std::size_t i = 0; i < parts.size(); ++i) {
                const bool last = i + 1 == parts.size();
                json& slot = (*node)[parts[i]];
                if (last && aot) {
                    if (slot.is_null()) slot = json::array();
                    if (!slot.is_array())
                        throw Error("parse error: line " + std::to_string(line_no) + ": '" +
                                    parts[i] + "' is not an array of tables");
                    slot.push_back(json::object());
                    node = &slot.back();
                } else {
                    if (slot.is_null()) slot = json::object();
                    if (slot.is_array()) {
                        if (slot.empty()) slot.push_back(json::object());
                        node = &slot.back();
                    } else if (slot.is_object()) {
                        node = &slot;
                    } else {
                        throw Error("parse error: line " + std::to_string(line_no) + ": '" +
                                    parts[i] + "' is not a table");
                    }
                }
            }
            table = node;
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("parse error: line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw Error("parse error: line " + std::to_string(line_no) + ": empty key");
        std::string value = trim(line.substr(eq + 1));
        // Multiline arrays: keep appending lines until brackets balance.
        auto balance = [](const std::string& s) {
            long b = 0;
            bool in_str = false;
            for (std::size_t i = 0; i < s.size(); ++i) {
                if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
                if (in_str) continue;
                if (s[i] == '[') ++b;
                if (s[i] == ']') --b;
            }
            return b;
        };
        while (balance(value) > 0 && std::getline(in, raw)) {
            ++line_no;
            value += " " + trim(strip_toml_comment(raw));
        }
        TomlCursor c{value, 0, line_no};
        json v = toml_value(c);
        if (!c.done())
            c.fail("trailing characters after value");
        (*table)[key] = std::move(v);
    }
    return root;
}

json law_to_json(const Law& l) {
    json j = json::object();
    switch (l.kind) {
        case LawKind::poisson_product:
            j["kind"] = "poisson";
            j["means"] = l.params;
            break;
        case LawKind::bernoulli_product:
            j["kind"] = "bernoulli";
            j["probs"] = l.params;
            break;
        case LawKind::finite_support: {
            j["kind"] = "finite";
            json atoms = json::array();
            for (std::size_t i = 0; i < l.atoms.size(); ++i)
                atoms.push_back(json{{"counts", l.atoms[i]}, {"prob", l.atom_probs[i]}});
            j["atoms"] = std::move(atoms);
            break;
        }
    }
    return j;
}

json mat_to_json(const Mat& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json trend_to_json(const TrendSeries& t) {
    return json{{"name", t.name},
                {"value", t.value},
                {"spearman", t.spearman},
                {"evaluable", t.evaluable},
                {"pass", t.pass}};
}

json ks_entries_to_json(const std::vector<KsEntry>& entries) {
    json arr = json::array();
    for (const auto& e : entries)
        arr.push_back(json{{"n", e.n},
                           {"class", e.class_index},
                           {"distance", e.distance},
                           {"p_value", e.p_value},
                           {"samples", e.samples},
                           {"lattice_gap", e.lattice_gap}});
    return arr;
}

}  // namespace

BranchingModel parse_model_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(std::string("parse error: ") + e.what());
    }
    return model_from_json(root);
}

BranchingModel parse_model_toml(const std::string& text) {
    return model_from_json(toml_to_json(text));
}

BranchingModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io error: cannot open model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const auto dot = path.find_last_of('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    if (ext == "json") return parse_model_json(text);
    if (ext == "toml") return parse_model_toml(text);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') return parse_model_json(text);
    return parse_model_toml(text);
}

std::string model_to_json(const BranchingModel& m) {
    json root = json::object();
    root["name"] = m.name;
    root["p"] = m.p;
    json off = json::array();
    for (const Law& l : m.offspring) off.push_back(law_to_json(l));
    root["offspring"] = std::move(off);
    root["immigration"] = law_to_json(m.immigration);
    return root.dump(2) + "\n";
}

std::uint64_t model_hash(const BranchingModel& m) {
    json root = json::object();
    root["name"] = m.name;
    root["p"] = m.p;
    json off = json::array();
    for (const Law& l : m.offspring) off.push_back(law_to_json(l));
    root["offspring"] = std::move(off);
    root["immigration"] = law_to_json(m.immigration);
    const std::string s = root.dump();
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::string structure_to_json(const CyclicStructure& s) {
    json root = json::object();
    root["r"] = s.r;
    root["classes"] = s.classes;  // 0-based type indices, class order 1..r
    root["permutation"] = s.permutation;
    root["rho"] = s.rho;
    root["u"] = s.u;
    root["v"] = s.v;
    if (s.rate) {
        root["rate_c"] = s.rate->c;
        root["rate_kappa"] = s.rate->kappa;
        root["rate_exact"] = s.rate->exact;
    } else {
        root["rate_c"] = nullptr;
        root["rate_kappa"] = nullptr;
    }
    return root.dump(2) + "\n";
}

std::string validation_to_json(const ValidationReport& v) {
    json root{{"irreducible", v.irreducible},
              {"criticality_gap", v.criticality_gap},
              {"critical", v.critical},
              {"cov_pattern_violation", v.cov_pattern_violation},
              {"cov_pattern_ok", v.cov_pattern_ok},
              {"fourth_moments_finite", v.fourth_moments_finite},
              {"immigration_degenerate", v.immigration_degenerate},
              {"pass", v.pass}};
    return root.dump(2) + "\n";
}

std::string coefficients_to_json(const SdeCoefficients& c) {
    json classes = json::array();
    for (std::size_t i = 0; i < c.a.size(); ++i)
        classes.push_back(json{{"class", i + 1},
                               {"a", c.a[i]},
                               {"b", c.b[i]},
                               {"m_xieps", c.m_xieps[i]},
                               {"V_xieps", mat_to_json(c.V_xieps[i])}});
    json root{{"r", c.r}, {"classes", std::move(classes)}};
    return root.dump(2) + "\n";
}

std::string report_to_json(const ConvergenceReport& r) {
    json root = json::object();
    root["model"] = r.model_name;
    root["n_list"] = r.n_list;
    root["T"] = r.T;
    root["replications"] = r.replications;
    root["seed"] = r.seed;
    root["not_critical"] = r.not_critical;

    json marg = json::object();
    marg["skipped"] = r.marginal.skipped;
    marg["notice"] = r.marginal.notice;
    marg["alpha"] = r.marginal.alpha;
    marg["family_size"] = r.marginal.family_size;
    marg["min_p"] = r.marginal.min_p;
    marg["entries"] = ks_entries_to_json(r.marginal.entries);
    marg["entries_without_cycle_factor"] = ks_entries_to_json(r.marginal.literal_entries);
    json deg = json::array();
    for (const auto& d : r.marginal.degenerate_entries)
        deg.push_back(json{{"n", d.n},
                           {"class", d.class_index},
                           {"max_deviation", d.max_deviation},
                           {"threshold", d.threshold},
                           {"pass", d.pass}});
    marg["degenerate_entries"] = std::move(deg);
    marg["pass"] = r.marginal.pass;
    root["marginal"] = std::move(marg);

    json ray = json::object();
    ray["skipped"] = r.ray.skipped;
    ray["notice"] = r.ray.notice;
    ray["n_list"] = r.ray.n_list;
    json ray_classes = json::array();
    for (const auto& t : r.ray.classes)
        ray_classes.push_back(json{{"class", t.class_index},
                                   {"median_angle", t.median_angle},
                                   {"spearman", t.spearman},
                                   {"pass", t.pass}});
    ray["classes"] = std::move(ray_classes);
    ray["pass"] = r.ray.pass;
    root["ray"] = std::move(ray);

    json ind = json::object();
    ind["skipped"] = r.independence.skipped;
    ind["notice"] = r.independence.notice;
    ind["gate_n"] = r.independence.gate_n;
    json pairs = json::array();
    for (const auto& e : r.independence.entries)
        pairs.push_back(json{{"n", e.n},
                             {"class_i", e.class_i},
                             {"class_j", e.class_j},
                             {"corr", e.corr},
                             {"threshold", e.threshold},
                             {"pass", e.pass}});
    ind["entries"] = std::move(pairs);
    ind["pass"] = r.independence.pass;
    root["independence"] = std::move(ind);

    json lc = json::object();
    lc["n_list"] = r.lindeberg_cov.n_list;
    lc["replications"] = r.lindeberg_cov.replications;
    lc["lindeberg_small"] = trend_to_json(r.lindeberg_cov.lindeberg_small);
    lc["lindeberg_unit"] = trend_to_json(r.lindeberg_cov.lindeberg_unit);
    lc["covariance_gap"] = trend_to_json(r.lindeberg_cov.covariance_gap);
    lc["pass"] = r.lindeberg_cov.pass;
    root["lindeberg_cov"] = std::move(lc);

    root["algebra"] = json{{"psi_gap_max", r.algebra.psi_gap_max},
                           {"pi_idempotent_gap", r.algebra.pi_idempotent_gap},
                           {"class_biorthogonality_gap", r.algebra.class_biorthogonality_gap},
                           {"tol", r.algebra.tol},
                           {"pass", r.algebra.pass}};
    root["notes"] = r.notes;
    root["pass"] = r.pass;
    return root.dump(2) + "\n";
}

std::string analysis_to_json(const BranchingModel& m, const ValidationReport& v) {
    json root = json::object();
    root["structure"] = m.structure ? json::parse(structure_to_json(*m.structure)) : json();
    root["validation"] = json::parse(validation_to_json(v));
    return root.dump(2) + "\n";
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Informational only; excluded from determinism comparisons. Honors
// SOURCE_DATE_EPOCH so reproducible runs can pin it.
std::string timestamp_utc() {
    std::time_t now = std::time(nullptr);
    if (const char* e = std::getenv("SOURCE_DATE_EPOCH")) {
        try {
            now = static_cast<std::time_t>(std::stoll(e));
        } catch (const std::exception&) {
        }
    }
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char stamp[40];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return stamp;
}

}  // namespace

std::string metadata_header(const MetadataHeader& h) {
    std::ostringstream out;
    out << "# branchlab " << kVersion << "\n";
    out << "# command=" << h.command << "\n";
    out << "# seed=" << h.seed << "\n";
    out << "# model_hash=" << hash_hex(h.hash) << "\n";
    out << "# timestamp=" << timestamp_utc() << "\n";
    return out.str();
}

std::string with_meta(const std::string& json_doc, const MetadataHeader& h) {
    json root = json::parse(json_doc);
    root["_meta"] = json{{"version", kVersion},
                         {"command", h.command},
                         {"seed", h.seed},
                         {"model_hash", hash_hex(h.hash)},
                         {"timestamp", timestamp_utc()}};
    return root.dump(2) + "\n";
}

}  // namespace branchlab

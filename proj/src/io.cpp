#include "valnet/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace valnet {

namespace {

double kInfIo() { return std::numeric_limits<double>::infinity(); }

std::string fmt(double v) {
    if (v == std::llround(v) && std::abs(v) < 1e15) {
        return std::to_string(std::llround(v));
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

nlohmann::json matrix_json(const std::vector<std::vector<double>>& M) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& row : M) j.push_back(row);
    return j;
}

std::vector<std::vector<double>> matrix_from(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array()) throw std::runtime_error("schema violation at " + path + ": expected array");
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array()) {
            throw std::runtime_error("schema violation at " + path + "[" + std::to_string(i) +
                                     "]: expected array");
        }
        out.push_back(j[i].get<std::vector<double>>());
    }
    return out;
}

}  // namespace

std::string write_native(const BilevelInstance& inst) {
    nlohmann::json j;
    j["format"] = 1;
    j["name"] = inst.name;
    j["n_leader"] = inst.n_leader;
    j["n_follower"] = inst.n_follower;
    j["m"] = inst.m;
    j["m_leader"] = inst.m_leader;
    j["c"] = inst.c;
    j["p"] = inst.p;
    j["d"] = inst.d;
    j["A"] = matrix_json(inst.A);
    j["B"] = matrix_json(inst.B);
    j["b"] = inst.b;
    j["Gx"] = matrix_json(inst.Gx);
    j["Gy"] = matrix_json(inst.Gy);
    j["h"] = inst.h;
    return j.dump(1);
}

BilevelInstance read_native(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(std::string("native parse error: ") + e.what());
    }
    auto need = [&j](const char* key) -> const nlohmann::json& {
        if (!j.contains(key)) throw std::runtime_error(std::string("schema violation at $.") + key + ": missing");
        return j[key];
    };
    if (need("format").get<int>() != 1) throw std::runtime_error("schema violation at $.format: expected 1");

    BilevelInstance inst;
    inst.name = j.value("name", "");
    inst.n_leader = need("n_leader").get<int>();
    inst.n_follower = need("n_follower").get<int>();
    inst.m = need("m").get<int>();
    inst.m_leader = need("m_leader").get<int>();
    inst.c = need("c").get<std::vector<double>>();
    inst.p = need("p").get<std::vector<double>>();
    inst.d = need("d").get<std::vector<double>>();
    inst.A = matrix_from(need("A"), "$.A");
    inst.B = matrix_from(need("B"), "$.B");
    inst.b = need("b").get<std::vector<double>>();
    inst.Gx = matrix_from(need("Gx"), "$.Gx");
    inst.Gy = matrix_from(need("Gy"), "$.Gy");
    inst.h = need("h").get<std::vector<double>>();
    inst.row_scale.assign(inst.m, 1.0);

    auto report = validate_instance(inst);
    if (!report.empty()) throw std::runtime_error("invalid instance: " + report.front());
    return inst;
}

namespace {

struct MpsData {
    std::string name;
    std::vector<std::string> row_names;  // constraint rows in file order
    std::vector<char> row_sense;         // 'G', 'L', 'E'
    std::string obj_name;
    std::map<std::string, int> row_index;
    std::vector<std::string> col_names;
    std::map<std::string, int> col_index;
    std::vector<std::map<int, double>> col_entries;  // per column: row -> coeff
    std::vector<double> col_obj;
    std::vector<bool> col_integer;
    std::vector<double> col_lb, col_ub;
    std::vector<double> rhs;  // per row
};

std::vector<std::string> tokens_of(const std::string& line) {
    std::istringstream is(line);
    std::vector<std::string> toks;
    std::string t;
    while (is >> t) toks.push_back(t);
    return toks;
}

MpsData parse_mps(const std::string& text) {
    MpsData mps;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    std::string section;
    bool in_integer = false;

    auto fail = [&lineno](const std::string& msg) {
        throw std::runtime_error("mps line " + std::to_string(lineno) + ": " + msg);
    };

    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '*') continue;
        bool header = !std::isspace(static_cast<unsigned char>(line[0]));
        auto toks = tokens_of(line);
        if (toks.empty()) continue;

        if (header) {
            std::string word = toks[0];
            if (word == "NAME") {
                mps.name = toks.size() > 1 ? toks[1] : "";
            } else if (word == "ROWS" || word == "COLUMNS" || word == "RHS" || word == "BOUNDS" ||
                       word == "ENDATA") {
                section = word;
            } else if (word == "RANGES") {
                fail("RANGES section not supported");
            } else {
                fail("unknown section '" + word + "'");
            }
            continue;
        }

        if (section == "ROWS") {
            if (toks.size() != 2) fail("expected '<sense> <name>'");
            char sense = std::toupper(static_cast<unsigned char>(toks[0][0]));
            if (sense == 'N') {
                if (mps.obj_name.empty()) mps.obj_name = toks[1];
            } else if (sense == 'G' || sense == 'L' || sense == 'E') {
                mps.row_index[toks[1]] = static_cast<int>(mps.row_names.size());
                mps.row_names.push_back(toks[1]);
                mps.row_sense.push_back(sense);
            } else {
                fail("unknown row sense");
            }
        } else if (section == "COLUMNS") {
            if (toks.size() >= 3 && toks[1] == "'MARKER'") {
                if (toks[2] == "'INTORG'") {
                    in_integer = true;
                } else if (toks[2] == "'INTEND'") {
                    in_integer = false;
                } else {
                    fail("unknown marker");
                }
                continue;
            }
            if (toks.size() != 3 && toks.size() != 5) fail("expected '<col> <row> <val> [<row> <val>]'");
            const std::string& col = toks[0];
            auto it = mps.col_index.find(col);
            int ci;
            if (it == mps.col_index.end()) {
                ci = static_cast<int>(mps.col_names.size());
                mps.col_index[col] = ci;
                mps.col_names.push_back(col);
                mps.col_entries.emplace_back();
                mps.col_obj.push_back(0.0);
                mps.col_integer.push_back(in_integer);
                mps.col_lb.push_back(0.0);
                mps.col_ub.push_back(in_integer ? 1.0 : kInfIo());
            } else {
                ci = it->second;
            }
            for (std::size_t k = 1; k + 1 < toks.size(); k += 2) {
                double v;
                try {
                    v = std::stod(toks[k + 1]);
                } catch (...) {
                    fail("bad numeric value '" + toks[k + 1] + "'");
                    return mps;
                }
                if (toks[k] == mps.obj_name) {
                    mps.col_obj[ci] = v;
                } else {
                    auto rit = mps.row_index.find(toks[k]);
                    if (rit == mps.row_index.end()) fail("unknown row '" + toks[k] + "'");
                    mps.col_entries[ci][rit->second] = v;
                }
            }
        } else if (section == "RHS") {
            if (toks.size() != 3 && toks.size() != 5) fail("expected '<set> <row> <val> [<row> <val>]'");
            if (mps.rhs.empty()) mps.rhs.assign(mps.row_names.size(), 0.0);
            for (std::size_t k = 1; k + 1 < toks.size(); k += 2) {
                if (toks[k] == mps.obj_name) continue;
                auto rit = mps.row_index.find(toks[k]);
                if (rit == mps.row_index.end()) fail("unknown row '" + toks[k] + "'");
                try {
                    mps.rhs[rit->second] = std::stod(toks[k + 1]);
                } catch (...) {
                    fail("bad numeric value '" + toks[k + 1] + "'");
                }
            }
        } else if (section == "BOUNDS") {
            if (toks.size() < 3) fail("expected '<type> <set> <col> [<val>]'");
            auto cit = mps.col_index.find(toks[2]);
            if (cit == mps.col_index.end()) fail("unknown column '" + toks[2] + "'");
            int ci = cit->second;
            const std::string& type = toks[0];
            double v = toks.size() > 3 ? std::stod(toks[3]) : 0.0;
            if (type == "BV") {
                mps.col_integer[ci] = true;
                mps.col_lb[ci] = 0.0;
                mps.col_ub[ci] = 1.0;
            } else if (type == "UP" || type == "UI") {
                mps.col_ub[ci] = v;
            } else if (type == "LO" || type == "LI") {
                mps.col_lb[ci] = v;
            } else if (type == "FX") {
                mps.col_lb[ci] = v;
                mps.col_ub[ci] = v;
            } else {
                fail("unsupported bound type '" + type + "'");
            }
        } else if (section == "ENDATA") {
            break;
        } else {
            fail("data line outside a section");
        }
    }
    if (mps.rhs.empty()) mps.rhs.assign(mps.row_names.size(), 0.0);
    return mps;
}

struct AuxData {
    int n_follower = -1;
    int m_follower = -1;
    std::vector<int> follower_cols;
    std::vector<int> follower_rows;
    std::vector<double> follower_obj;
    int sense = 1;
};

AuxData parse_aux(const std::string& text) {
    AuxData aux;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    auto fail = [&lineno](const std::string& msg) {
        throw std::runtime_error("aux line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(is, line)) {
        ++lineno;
        auto toks = tokens_of(line);
        if (toks.empty() || toks[0][0] == '#' || toks[0][0] == '@') continue;
        if (toks.size() != 2) fail("expected '<tag> <value>'");
        const std::string& tag = toks[0];
        double v;
        try {
            v = std::stod(toks[1]);
        } catch (...) {
            fail("bad numeric value '" + toks[1] + "'");
            return aux;
        }
        if (tag == "N") {
            aux.n_follower = static_cast<int>(v);
        } else if (tag == "M") {
            aux.m_follower = static_cast<int>(v);
        } else if (tag == "LC") {
            aux.follower_cols.push_back(static_cast<int>(v));
        } else if (tag == "LR") {
            aux.follower_rows.push_back(static_cast<int>(v));
        } else if (tag == "LO") {
            aux.follower_obj.push_back(v);
        } else if (tag == "OS") {
            aux.sense = static_cast<int>(v);
        } else {
            fail("unknown tag '" + tag + "'");
        }
    }
    if (aux.n_follower < 0) throw std::runtime_error("aux: missing N line");
    if (aux.m_follower < 0) throw std::runtime_error("aux: missing M line");
    if (static_cast<int>(aux.follower_cols.size()) != aux.n_follower) {
        throw std::runtime_error("aux: LC count does not match N");
    }
    if (static_cast<int>(aux.follower_rows.size()) != aux.m_follower) {
        throw std::runtime_error("aux: LR count does not match M");
    }
    if (static_cast<int>(aux.follower_obj.size()) != aux.n_follower) {
        throw std::runtime_error("aux: LO count does not match N");
    }
    return aux;
}

}  // namespace

BilevelInstance parse_mps_aux(const std::string& mps_text, const std::string& aux_text) {
    MpsData mps = parse_mps(mps_text);
    AuxData aux = parse_aux(aux_text);

    const int n_cols = static_cast<int>(mps.col_names.size());
    const int n_rows = static_cast<int>(mps.row_names.size());

    for (int ci = 0; ci < n_cols; ++ci) {
        if (!mps.col_integer[ci] || mps.col_lb[ci] != 0.0 || mps.col_ub[ci] != 1.0) {
            throw std::runtime_error("mps: column '" + mps.col_names[ci] + "' is not binary");
        }
    }
    std::vector<bool> is_follower_col(n_cols, false);
    for (int c : aux.follower_cols) {
        if (c < 0 || c >= n_cols) throw std::runtime_error("aux: LC index out of range");
        is_follower_col[c] = true;
    }
    std::vector<bool> is_follower_row(n_rows, false);
    for (int r : aux.follower_rows) {
        if (r < 0 || r >= n_rows) throw std::runtime_error("aux: LR index out of range");
        is_follower_row[r] = true;
    }

    // Column split, preserving file order.
    std::vector<int> leader_cols, follower_cols;
    for (int ci = 0; ci < n_cols; ++ci) {
        (is_follower_col[ci] ? follower_cols : leader_cols).push_back(ci);
    }
    // Follower columns keep the LC order for the objective alignment.
    follower_cols = aux.follower_cols;

    // Normalize every row to ">=", splitting equalities into two rows.
    struct NormRow {
        std::vector<double> a;  // over all original columns
        double rhs;
        bool interaction;
    };
    std::vector<NormRow> norm;
    for (int ri = 0; ri < n_rows; ++ri) {
        std::vector<double> coef(n_cols, 0.0);
        for (int ci = 0; ci < n_cols; ++ci) {
            auto it = mps.col_entries[ci].find(ri);
            if (it != mps.col_entries[ci].end()) coef[ci] = it->second;
        }
        char s = mps.row_sense[ri];
        if (s == 'G' || s == 'E') {
            norm.push_back(NormRow{coef, mps.rhs[ri], is_follower_row[ri]});
        }
        if (s == 'L' || s == 'E') {
            std::vector<double> neg(n_cols);
            for (int ci = 0; ci < n_cols; ++ci) neg[ci] = -coef[ci];
            norm.push_back(NormRow{std::move(neg), -mps.rhs[ri], is_follower_row[ri]});
        }
    }

    BilevelInstance inst;
    inst.name = mps.name;
    inst.n_leader = static_cast<int>(leader_cols.size());
    inst.n_follower = static_cast<int>(follower_cols.size());
    if (inst.n_leader < 1) throw std::runtime_error("mps/aux: no leader columns remain");

    for (const NormRow& row : norm) {
        if (row.interaction) ++inst.m; else ++inst.m_leader;
    }
    inst.A.assign(inst.m, std::vector<double>(inst.n_leader, 0.0));
    inst.B.assign(inst.m, std::vector<double>(inst.n_follower, 0.0));
    inst.b.assign(inst.m, 0.0);
    inst.Gx.assign(inst.m_leader, std::vector<double>(inst.n_leader, 0.0));
    inst.Gy.assign(inst.m_leader, std::vector<double>(inst.n_follower, 0.0));
    inst.h.assign(inst.m_leader, 0.0);

    int ii = 0, li = 0;
    for (const NormRow& row : norm) {
        if (row.interaction) {
            for (std::size_t j = 0; j < leader_cols.size(); ++j) inst.A[ii][j] = row.a[leader_cols[j]];
            for (std::size_t j = 0; j < follower_cols.size(); ++j) inst.B[ii][j] = row.a[follower_cols[j]];
            inst.b[ii] = row.rhs;
            ++ii;
        } else {
            for (std::size_t j = 0; j < leader_cols.size(); ++j) inst.Gx[li][j] = row.a[leader_cols[j]];
            for (std::size_t j = 0; j < follower_cols.size(); ++j) inst.Gy[li][j] = row.a[follower_cols[j]];
            inst.h[li] = row.rhs;
            ++li;
        }
    }

    inst.c.resize(inst.n_leader);
    for (std::size_t j = 0; j < leader_cols.size(); ++j) inst.c[j] = mps.col_obj[leader_cols[j]];
    inst.p.resize(inst.n_follower);
    for (std::size_t j = 0; j < follower_cols.size(); ++j) inst.p[j] = mps.col_obj[follower_cols[j]];
    inst.d = aux.follower_obj;
    if (aux.sense == -1) {
        for (double& v : inst.d) v = -v;
    } else if (aux.sense != 1) {
        throw std::runtime_error("aux: OS must be 1 or -1");
    }
    inst.row_scale.assign(inst.m, 1.0);

    auto report = validate_instance(inst);
    if (!report.empty()) throw std::runtime_error("mps/aux: invalid instance: " + report.front());
    return inst;
}

MpsAuxText write_mps_aux(const BilevelInstance& inst) {
    std::ostringstream mps;
    mps << "NAME " << (inst.name.empty() ? "bilevel" : inst.name) << "\n";
    mps << "ROWS\n N OBJ\n";
    for (int i = 0; i < inst.m; ++i) mps << " G R" << i << "\n";
    for (int i = 0; i < inst.m_leader; ++i) mps << " G L" << i << "\n";

    mps << "COLUMNS\n";
    mps << "    MARK0 'MARKER' 'INTORG'\n";
    auto emit_col = [&mps](const std::string& name, double obj, const std::vector<std::pair<std::string, double>>& entries) {
        if (obj != 0.0) mps << "    " << name << " OBJ " << fmt(obj) << "\n";
        for (const auto& [row, v] : entries) {
            if (v != 0.0) mps << "    " << name << " " << row << " " << fmt(v) << "\n";
        }
    };
    for (int j = 0; j < inst.n_leader; ++j) {
        std::vector<std::pair<std::string, double>> entries;
        for (int i = 0; i < inst.m; ++i) entries.emplace_back("R" + std::to_string(i), inst.A[i][j]);
        for (int i = 0; i < inst.m_leader; ++i) entries.emplace_back("L" + std::to_string(i), inst.Gx[i][j]);
        emit_col("x" + std::to_string(j), inst.c[j], entries);
    }
    for (int j = 0; j < inst.n_follower; ++j) {
        std::vector<std::pair<std::string, double>> entries;
        for (int i = 0; i < inst.m; ++i) entries.emplace_back("R" + std::to_string(i), inst.B[i][j]);
        for (int i = 0; i < inst.m_leader; ++i) entries.emplace_back("L" + std::to_string(i), inst.Gy[i][j]);
        emit_col("y" + std::to_string(j), inst.p[j], entries);
    }
    mps << "    MARK1 'MARKER' 'INTEND'\n";

    mps << "RHS\n";
    for (int i = 0; i < inst.m; ++i) {
        if (inst.b[i] != 0.0) mps << "    RHS R" << i << " " << fmt(inst.b[i]) << "\n";
    }
    for (int i = 0; i < inst.m_leader; ++i) {
        if (inst.h[i] != 0.0) mps << "    RHS L" << i << " " << fmt(inst.h[i]) << "\n";
    }
    mps << "BOUNDS\n";
    for (int j = 0; j < inst.n_leader; ++j) mps << " BV BND x" << j << "\n";
    for (int j = 0; j < inst.n_follower; ++j) mps << " BV BND y" << j << "\n";
    mps << "ENDATA\n";

    std::ostringstream aux;
    aux << "N " << inst.n_follower << "\n";
    aux << "M " << inst.m << "\n";
    for (int j = 0; j < inst.n_follower; ++j) aux << "LC " << inst.n_leader + j << "\n";
    for (int i = 0; i < inst.m; ++i) aux << "LR " << i << "\n";
    for (int j = 0; j < inst.n_follower; ++j) aux << "LO " << fmt(inst.d[j]) << "\n";
    aux << "OS 1\n";
    return MpsAuxText{mps.str(), aux.str()};
}

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace

BilevelInstance load_instance_file(const std::string& path) {
    if (path.size() > 4 && path.substr(path.size() - 4) == ".mps") {
        std::string aux_path = path.substr(0, path.size() - 4) + ".aux";
        return parse_mps_aux(read_file(path), read_file(aux_path));
    }
    return read_native(read_file(path));
}

void save_instance_file(const BilevelInstance& inst, const std::string& path) {
    if (path.size() > 4 && path.substr(path.size() - 4) == ".mps") {
        MpsAuxText text = write_mps_aux(inst);
        std::ofstream m(path);
        if (!m) throw std::runtime_error("cannot write file: " + path);
        m << text.mps;
        std::ofstream a(path.substr(0, path.size() - 4) + ".aux");
        if (!a) throw std::runtime_error("cannot write aux file for: " + path);
        a << text.aux;
        return;
    }
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write file: " + path);
    f << write_native(inst);
}

}  // namespace valnet

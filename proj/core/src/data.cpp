#include "costdiag/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace costdiag {

using nlohmann::json;

bool MCMatrix::all_zero() const {
    for (const auto& row : cost)
        for (double c : row)
            if (c != 0.0) return false;
    return true;
}

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

double parse_number(const std::string& tok, const std::string& what) {
    try {
        size_t pos = 0;
        double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw ParseError("");
        return v;
    } catch (...) {
        throw ParseError("cannot parse " + what + ": '" + tok + "'");
    }
}

}  // namespace

RawDataset load_dataset(const std::filesystem::path& csv_path, const std::string& class_column,
                        const std::filesystem::path& cost_sidecar) {
    auto lines = read_lines(csv_path);
    if (lines.empty()) throw ParseError("empty dataset file: " + csv_path.string());

    auto header = split_csv_line(lines[0]);
    int class_idx = -1;
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == class_column) class_idx = static_cast<int>(i);
    if (class_idx < 0)
        throw ConfigError("class column '" + class_column + "' not found in header");

    RawDataset raw;
    raw.class_name = class_column;
    for (size_t i = 0; i < header.size(); ++i)
        if (static_cast<int>(i) != class_idx) raw.attribute_names.push_back(header[i]);

    for (size_t r = 1; r < lines.size(); ++r) {
        if (trim(lines[r]).empty()) continue;
        auto fields = split_csv_line(lines[r]);
        if (fields.size() != header.size())
            throw ParseError("row " + std::to_string(r + 1) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        std::vector<std::string> row;
        for (size_t i = 0; i < fields.size(); ++i) {
            if (static_cast<int>(i) == class_idx)
                raw.labels.push_back(fields[i]);
            else
                row.push_back(fields[i]);
        }
        raw.rows.push_back(std::move(row));
    }

    std::map<std::string, double> costs;
    if (!cost_sidecar.empty()) {
        for (const auto& line : read_lines(cost_sidecar)) {
            auto t = trim(line);
            if (t.empty()) continue;
            auto fields = split_csv_line(t);
            if (fields.size() != 2)
                throw ParseError("cost sidecar line is not 'name,cost': '" + std::string(t) + "'");
            costs[fields[0]] = parse_number(fields[1], "cost of '" + fields[0] + "'");
        }
    }
    raw.costs.resize(raw.attribute_names.size());
    for (size_t i = 0; i < raw.attribute_names.size(); ++i) {
        auto it = costs.find(raw.attribute_names[i]);
        raw.costs[i] = it == costs.end() ? 1.0 : it->second;  // unpriced tests cost 1
        if (raw.costs[i] < 0)
            throw ConfigError("negative cost for attribute '" + raw.attribute_names[i] + "'");
    }
    return raw;
}

CleanResult clean(const RawDataset& raw, const std::map<std::string, int>& class_merge,
                  const std::string& missing_token) {
    CleanResult out;
    out.data.attribute_names = raw.attribute_names;
    out.data.class_name = raw.class_name;
    out.data.costs = raw.costs;

    for (size_t r = 0; r < raw.rows.size(); ++r) {
        bool missing = false;
        for (const auto& tok : raw.rows[r])
            if (tok == missing_token) { missing = true; break; }
        if (missing || raw.labels[r] == missing_token) {
            ++out.removed;
            continue;
        }
        auto it = class_merge.find(raw.labels[r]);
        if (it == class_merge.end())
            throw ConfigError("class label '" + raw.labels[r] + "' has no merge mapping");
        out.data.rows.push_back(raw.rows[r]);
        out.data.labels.push_back(std::to_string(it->second));
    }
    if (out.data.rows.empty()) throw Error("no examples remain after cleaning");
    return out;
}

double info_gain_of_thresholds(std::span<const double> values, std::span<const int> labels,
                               int num_classes, double t1, double t2) {
    const int bins = 3;
    std::vector<std::vector<long>> count(bins, std::vector<long>(num_classes, 0));
    std::vector<long> total(num_classes, 0);
    for (size_t i = 0; i < values.size(); ++i) {
        int b = values[i] <= t1 ? 0 : (values[i] <= t2 ? 1 : 2);
        ++count[b][labels[i]];
        ++total[labels[i]];
    }
    long n = static_cast<long>(values.size());
    auto h = [&](const std::vector<long>& c, long m) {
        if (m == 0) return 0.0;
        double e = 0;
        for (long x : c) {
            if (x == 0) continue;
            double p = static_cast<double>(x) / m;
            e -= p * std::log2(p);
        }
        return e;
    };
    double gain = h(total, n);
    for (int b = 0; b < bins; ++b) {
        long m = std::accumulate(count[b].begin(), count[b].end(), 0l);
        gain -= (static_cast<double>(m) / n) * h(count[b], m);
    }
    return gain;
}

namespace {

// Dense integer codes for categorical tokens: numeric order when every token
// parses as a number, otherwise lexicographic.
std::vector<std::string> code_order(const std::vector<std::string>& tokens) {
    std::vector<std::string> uniq = tokens;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    bool numeric = true;
    std::vector<std::pair<double, std::string>> parsed;
    for (const auto& t : uniq) {
        try {
            size_t pos = 0;
            double v = std::stod(t, &pos);
            if (pos != t.size()) { numeric = false; break; }
            parsed.emplace_back(v, t);
        } catch (...) {
            numeric = false;
            break;
        }
    }
    if (numeric) {
        std::sort(parsed.begin(), parsed.end());
        std::vector<std::string> out;
        for (auto& [v, t] : parsed) out.push_back(t);
        return out;
    }
    return uniq;
}

// Best (t1, t2) by exhaustive search over midpoint pairs, maximizing info
// gain with the class; ties go to the lexicographically smallest pair.
// Prefix class counts over the sorted values make each pair O(K).
std::pair<double, double> best_threshold_pair(const std::vector<double>& vals,
                                              const std::vector<int>& labels, int num_classes) {
    std::vector<int> order(vals.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return vals[a] < vals[b]; });

    std::vector<double> sorted_vals;
    std::vector<double> cuts;  // candidate thresholds: midpoints between distinct values
    for (int idx : order) sorted_vals.push_back(vals[idx]);
    for (size_t i = 0; i + 1 < sorted_vals.size(); ++i)
        if (sorted_vals[i] < sorted_vals[i + 1])
            cuts.push_back((sorted_vals[i] + sorted_vals[i + 1]) / 2.0);
    // prefix[i][y]: count of class y among the i smallest values
    size_t n = vals.size();
    std::vector<std::vector<long>> prefix(n + 1, std::vector<long>(num_classes, 0));
    for (size_t i = 0; i < n; ++i) {
        prefix[i + 1] = prefix[i];
        ++prefix[i + 1][labels[order[i]]];
    }
    // position of each cut in the sorted sequence (count of values <= cut)
    std::vector<size_t> cut_pos;
    for (double c : cuts)
        cut_pos.push_back(std::upper_bound(sorted_vals.begin(), sorted_vals.end(), c) -
                          sorted_vals.begin());

    auto h_range = [&](size_t lo, size_t hi) {  // entropy of labels in (lo, hi]
        long m = static_cast<long>(hi - lo);
        if (m == 0) return 0.0;
        double e = 0;
        for (int y = 0; y < num_classes; ++y) {
            long x = prefix[hi][y] - prefix[lo][y];
            if (x == 0) continue;
            double p = static_cast<double>(x) / m;
            e -= p * std::log2(p);
        }
        return e;
    };

    double h_all = h_range(0, n);
    double best_gain = -1;
    std::pair<double, double> best = {cuts[0], cuts[1]};
    for (size_t i = 0; i < cuts.size(); ++i) {
        for (size_t j = i + 1; j < cuts.size(); ++j) {
            size_t p1 = cut_pos[i], p2 = cut_pos[j];
            double gain = h_all -
                          (static_cast<double>(p1) / n) * h_range(0, p1) -
                          (static_cast<double>(p2 - p1) / n) * h_range(p1, p2) -
                          (static_cast<double>(n - p2) / n) * h_range(p2, n);
            if (gain > best_gain) {  // enumeration order is lexicographic in (t1, t2)
                best_gain = gain;
                best = {cuts[i], cuts[j]};
            }
        }
    }
    return best;
}

}  // namespace

Dataset discretize(const RawDataset& raw, const std::set<std::string>& continuous_attrs) {
    Dataset ds;
    size_t n_attrs = raw.attribute_names.size();
    size_t n_rows = raw.rows.size();
    if (n_rows == 0) throw Error("cannot discretize an empty dataset");

    // class codes first: needed for the info-gain threshold search
    auto class_order = code_order(raw.labels);
    std::map<std::string, int> class_code;
    for (size_t i = 0; i < class_order.size(); ++i) class_code[class_order[i]] = static_cast<int>(i);
    ds.class_names = class_order;
    ds.num_classes = static_cast<int>(class_order.size());
    std::vector<int> y(n_rows);
    for (size_t r = 0; r < n_rows; ++r) y[r] = class_code[raw.labels[r]];

    ds.examples.resize(n_rows);
    for (size_t r = 0; r < n_rows; ++r) {
        ds.examples[r].values.resize(n_attrs);
        ds.examples[r].label = y[r];
    }

    for (size_t a = 0; a < n_attrs; ++a) {
        AttributeMeta meta;
        meta.name = raw.attribute_names[a];
        meta.cost = raw.costs[a];
        if (continuous_attrs.count(meta.name)) {
            std::vector<double> vals(n_rows);
            for (size_t r = 0; r < n_rows; ++r)
                vals[r] = parse_number(raw.rows[r][a], "value of '" + meta.name + "'");
            std::vector<double> uniq = vals;
            std::sort(uniq.begin(), uniq.end());
            uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
            if (uniq.size() < 2) {
                meta.arity = 1;
                meta.usable = false;
                for (size_t r = 0; r < n_rows; ++r) ds.examples[r].values[a] = 0;
            } else if (uniq.size() == 2) {
                meta.thresholds = {(uniq[0] + uniq[1]) / 2.0};
                meta.arity = 2;
                for (size_t r = 0; r < n_rows; ++r)
                    ds.examples[r].values[a] = vals[r] <= meta.thresholds[0] ? 0 : 1;
            } else {
                auto [t1, t2] = best_threshold_pair(vals, y, ds.num_classes);
                meta.thresholds = {t1, t2};
                meta.arity = 3;
                for (size_t r = 0; r < n_rows; ++r)
                    ds.examples[r].values[a] = vals[r] <= t1 ? 0 : (vals[r] <= t2 ? 1 : 2);
            }
        } else {
            std::vector<std::string> col(n_rows);
            for (size_t r = 0; r < n_rows; ++r) col[r] = raw.rows[r][a];
            auto order = code_order(col);
            std::map<std::string, int> code;
            for (size_t i = 0; i < order.size(); ++i) code[order[i]] = static_cast<int>(i);
            meta.arity = static_cast<int>(order.size());
            meta.usable = meta.arity >= 2;
            for (size_t r = 0; r < n_rows; ++r) ds.examples[r].values[a] = code[col[r]];
        }
        ds.attrs.push_back(std::move(meta));
    }
    return ds;
}

std::vector<Replica> make_replicas(const Dataset& ds, int n, double train_frac, uint64_t seed) {
    std::vector<std::vector<int>> by_class(ds.num_classes);
    for (int i = 0; i < ds.size(); ++i) by_class[ds.examples[i].label].push_back(i);
    for (int y = 0; y < ds.num_classes; ++y)
        if (by_class[y].size() < 2)
            throw Error("class " + std::to_string(y) + " has fewer than 2 examples; cannot stratify");

    std::vector<Replica> out;
    for (int r = 0; r < n; ++r) {
        Replica rep;
        rep.seed = mix_seed(seed, static_cast<uint64_t>(r));
        Rng rng(rep.seed);
        for (int y = 0; y < ds.num_classes; ++y) {
            std::vector<int> idx = by_class[y];
            rng.shuffle(idx);
            long take = std::llround(train_frac * static_cast<double>(idx.size()));
            take = std::clamp<long>(take, 1, static_cast<long>(idx.size()) - 1);
            rep.train.insert(rep.train.end(), idx.begin(), idx.begin() + take);
            rep.test.insert(rep.test.end(), idx.begin() + take, idx.end());
        }
        std::sort(rep.train.begin(), rep.train.end());
        std::sort(rep.test.begin(), rep.test.end());
        out.push_back(std::move(rep));
    }
    return out;
}

MCMatrix build_mc_matrix(const Dataset& ds, int level, std::optional<double> base_unit) {
    if (ds.num_classes != 2) throw ConfigError("MC level construction requires exactly 2 classes");
    if (level < 1 || level > 5) throw ConfigError("MC level must be in 1..5");

    long n0 = 0, n1 = 0;
    for (const auto& ex : ds.examples) (ex.label == 0 ? n0 : n1)++;
    if (n0 == 0 || n1 == 0)
        throw Error("a class prior is zero; equal-expected-cost constraint is unsatisfiable");
    double p0 = static_cast<double>(n0) / ds.size();
    double p1 = static_cast<double>(n1) / ds.size();

    double base = base_unit.value_or([&] {
        double sum = 0;
        for (const auto& a : ds.attrs)
            if (a.usable) sum += a.cost;
        return sum;
    }());
    if (base <= 0) throw ConfigError("MC base unit must be positive");

    // Both diagnoses have equal expected cost at s0: p0*mc[1][0] = p1*mc[0][1],
    // scaled so the smaller off-diagonal equals multiplier * base.
    double m = kMcLevelMultiplier[level - 1];
    double pmax = std::max(p0, p1);
    MCMatrix mc;
    mc.level = level;
    mc.cost = {{0.0, m * base * pmax / p1}, {m * base * pmax / p0, 0.0}};
    return mc;
}

size_t SyntheticSpec::cell_index(std::span<const int> values, int y) const {
    size_t idx = 0;
    for (size_t a = 0; a < attrs.size(); ++a) idx = idx * attrs[a].arity + values[a];
    return idx * num_classes + y;
}

size_t SyntheticSpec::table_size() const {
    size_t n = num_classes;
    for (const auto& a : attrs) n *= a.arity;
    return n;
}

void SyntheticSpec::validate() const {
    if (num_classes < 2) throw ConfigError("synthetic spec needs at least 2 classes");
    if (attrs.empty()) throw ConfigError("synthetic spec needs at least one attribute");
    if (joint.size() != table_size())
        throw ConfigError("joint table has " + std::to_string(joint.size()) + " cells, expected " +
                          std::to_string(table_size()));
    double sum = 0;
    for (double p : joint) {
        if (p < 0) throw ConfigError("joint table has a negative probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("joint table sums to " + fmt_double(sum) + ", not 1");
}

namespace {

Dataset dataset_shell(const SyntheticSpec& spec) {
    Dataset ds;
    ds.attrs = spec.attrs;
    ds.num_classes = spec.num_classes;
    ds.class_names = spec.class_names;
    if (ds.class_names.empty())
        for (int k = 0; k < spec.num_classes; ++k) ds.class_names.push_back(std::to_string(k));
    return ds;
}

Example decode_cell(const SyntheticSpec& spec, size_t cell) {
    Example ex;
    ex.label = static_cast<int>(cell % spec.num_classes);
    cell /= spec.num_classes;
    ex.values.resize(spec.attrs.size());
    for (int a = static_cast<int>(spec.attrs.size()) - 1; a >= 0; --a) {
        ex.values[a] = static_cast<int>(cell % spec.attrs[a].arity);
        cell /= spec.attrs[a].arity;
    }
    return ex;
}

}  // namespace

Dataset gen_synthetic(const SyntheticSpec& spec, uint64_t seed, int m) {
    spec.validate();
    Dataset ds = dataset_shell(spec);
    std::vector<double> cum(spec.joint.size());
    double acc = 0;
    for (size_t i = 0; i < spec.joint.size(); ++i) {
        acc += spec.joint[i];
        cum[i] = acc;
    }
    cum.back() = 1.0;
    Rng rng(seed);
    for (int i = 0; i < m; ++i) {
        double u = rng.unit();
        size_t cell = std::lower_bound(cum.begin(), cum.end(), u) - cum.begin();
        if (cell == cum.size()) cell = cum.size() - 1;
        ds.examples.push_back(decode_cell(spec, cell));
    }
    return ds;
}

Dataset materialize_exact(const SyntheticSpec& spec, int m) {
    spec.validate();
    Dataset ds = dataset_shell(spec);
    long emitted = 0;
    for (size_t cell = 0; cell < spec.joint.size(); ++cell) {
        long cnt = std::llround(spec.joint[cell] * m);
        for (long i = 0; i < cnt; ++i) ds.examples.push_back(decode_cell(spec, cell));
        emitted += cnt;
    }
    if (emitted != m)
        throw ConfigError("joint table frequencies are not exact at m=" + std::to_string(m));
    return ds;
}

Dataset subset(const Dataset& ds, std::span<const int> indices) {
    Dataset out;
    out.attrs = ds.attrs;
    out.num_classes = ds.num_classes;
    out.class_names = ds.class_names;
    out.examples.reserve(indices.size());
    for (int i : indices) out.examples.push_back(ds.examples[i]);
    return out;
}

// ---------------------------------------------------------------------------
// file formats

namespace {

json attr_to_json(const AttributeMeta& a) {
    json j{{"name", a.name}, {"arity", a.arity}, {"cost", a.cost}, {"usable", a.usable}};
    if (!a.thresholds.empty()) j["thresholds"] = a.thresholds;
    return j;
}

AttributeMeta attr_from_json(const json& j) {
    AttributeMeta a;
    a.name = j.at("name").get<std::string>();
    a.arity = j.at("arity").get<int>();
    a.cost = j.at("cost").get<double>();
    a.usable = j.value("usable", a.arity >= 2);
    if (j.contains("thresholds")) a.thresholds = j["thresholds"].get<std::vector<double>>();
    return a;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path.string());
    out << text;
}

json parse_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    json j;
    j["classes"] = ds.class_names;
    j["attrs"] = json::array();
    for (const auto& a : ds.attrs) j["attrs"].push_back(attr_to_json(a));
    json rows = json::array();
    for (const auto& ex : ds.examples) {
        json row = ex.values;
        row.push_back(ex.label);
        rows.push_back(std::move(row));
    }
    j["examples"] = std::move(rows);
    write_text(path, j.dump(1) + "\n");
}

Dataset load_prepared_dataset(const std::filesystem::path& path) {
    json j = parse_json_file(path);
    Dataset ds;
    ds.class_names = j.at("classes").get<std::vector<std::string>>();
    ds.num_classes = static_cast<int>(ds.class_names.size());
    for (const auto& a : j.at("attrs")) ds.attrs.push_back(attr_from_json(a));
    for (const auto& row : j.at("examples")) {
        Example ex;
        for (size_t i = 0; i + 1 < row.size(); ++i) ex.values.push_back(row[i].get<int>());
        ex.label = row.back().get<int>();
        if (ex.values.size() != ds.attrs.size() || ex.label < 0 || ex.label >= ds.num_classes)
            throw ParseError(path.string() + ": malformed example row");
        for (size_t a = 0; a < ex.values.size(); ++a)
            if (ex.values[a] < 0 || ex.values[a] >= ds.attrs[a].arity)
                throw ParseError(path.string() + ": value out of arity range");
        ds.examples.push_back(std::move(ex));
    }
    return ds;
}

void save_replica(const Replica& r, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "seed: " << r.seed << "\n";
    out << "train:\n";
    for (int i : r.train) out << i << "\n";
    out << "test:\n";
    for (int i : r.test) out << i << "\n";
    write_text(path, out.str());
}

Replica load_replica(const std::filesystem::path& path) {
    Replica r;
    int section = 0;  // 0 header, 1 train, 2 test
    for (const auto& raw_line : read_lines(path)) {
        auto line = std::string(trim(raw_line));
        if (line.empty()) continue;
        if (line.rfind("seed:", 0) == 0) {
            r.seed = std::stoull(line.substr(5));
        } else if (line == "train:") {
            section = 1;
        } else if (line == "test:") {
            section = 2;
        } else {
            int idx = static_cast<int>(parse_number(line, "replica index"));
            if (section == 1) r.train.push_back(idx);
            else if (section == 2) r.test.push_back(idx);
            else throw ParseError(path.string() + ": index before train:/test: section");
        }
    }
    if (r.train.empty() || r.test.empty())
        throw ParseError(path.string() + ": replica must list train and test indices");
    return r;
}

void save_mc_matrix(const MCMatrix& mc, const std::filesystem::path& path) {
    json j{{"level", mc.level}, {"cost", mc.cost}};
    write_text(path, j.dump(1) + "\n");
}

MCMatrix load_mc_matrix(const std::filesystem::path& path) {
    json j = parse_json_file(path);
    MCMatrix mc;
    mc.level = j.value("level", 0);
    mc.cost = j.at("cost").get<std::vector<std::vector<double>>>();
    for (size_t k = 0; k < mc.cost.size(); ++k) {
        if (mc.cost[k].size() != mc.cost.size())
            throw ParseError(path.string() + ": MC matrix is not square");
        if (mc.cost[k][k] != 0.0)
            throw ParseError(path.string() + ": MC matrix diagonal must be zero");
        for (double c : mc.cost[k])
            if (c < 0) throw ParseError(path.string() + ": MC matrix has a negative cost");
    }
    return mc;
}

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
    json j = parse_json_file(path);
    SyntheticSpec spec;
    for (const auto& a : j.at("attrs")) spec.attrs.push_back(attr_from_json(a));
    if (j.contains("classes") && j["classes"].is_array())
        spec.class_names = j["classes"].get<std::vector<std::string>>();
    else
        for (int k = 0; k < j.at("classes").get<int>(); ++k)
            spec.class_names.push_back(std::to_string(k));
    spec.num_classes = static_cast<int>(spec.class_names.size());
    spec.joint = j.at("joint").get<std::vector<double>>();
    if (j.contains("mc")) {
        MCMatrix mc;
        mc.cost = j["mc"].get<std::vector<std::vector<double>>>();
        spec.mc = std::move(mc);
    }
    spec.validate();
    return spec;
}

void save_synthetic_spec(const SyntheticSpec& spec, const std::filesystem::path& path) {
    json j;
    j["attrs"] = json::array();
    for (const auto& a : spec.attrs) j["attrs"].push_back(attr_to_json(a));
    j["classes"] = spec.class_names;
    j["joint"] = spec.joint;
    if (spec.mc) j["mc"] = spec.mc->cost;
    write_text(path, j.dump(1) + "\n");
}

}  // namespace costdiag

#include "costdiag/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <thread>

#include "costdiag/greedy.hpp"

namespace costdiag {

const std::vector<std::string>& algorithm_names() {
    static const std::vector<std::string> names = {
        "Nor", "Nor-L", "MC-N", "MC-N-L", "VOI", "VOI-L", "AO*", "AO*-L",
        "SP", "SP-L", "ES", "ES-L", "PPP", "PPP-L"};
    return names;
}

bool is_valid_algorithm(const std::string& name) {
    const auto& names = algorithm_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

bool is_laplace(const std::string& name) {
    return name.size() > 2 && name.substr(name.size() - 2) == "-L";
}

namespace {

std::string base_name(const std::string& name) {
    return is_laplace(name) ? name.substr(0, name.size() - 2) : name;
}

}  // namespace

bool is_systematic(const std::string& name) {
    std::string b = base_name(name);
    return b == "AO*" || b == "SP" || b == "ES" || b == "PPP";
}

TrainResult train_algorithm(const std::string& name, const Dataset& train,
                            const CostModel& cost, uint64_t seed, const TrainOptions& opts) {
    if (!is_valid_algorithm(name)) {
        std::string all;
        for (const auto& n : algorithm_names()) all += (all.empty() ? "" : ", ") + n;
        throw ConfigError("unknown algorithm '" + name + "'; valid names: " + all);
    }
    Smoothing mode = is_laplace(name) ? Smoothing::Laplace : Smoothing::ML;
    std::string b = base_name(name);
    TrainResult out;

    if (b == "Nor" || b == "MC-N" || b == "VOI") {
        ProbEstimator est(train, mode);
        GreedyConfig cfg;
        cfg.variant = b == "Nor" ? GreedyVariant::Norton
                                 : (b == "MC-N" ? GreedyVariant::McNorton : GreedyVariant::Voi);
        cfg.laplace = mode == Smoothing::Laplace;
        cfg.voi_min_support = opts.voi_min_support;
        out.policy = grow_greedy(est, cost, cfg);
        return out;
    }

    SearchConfig config;
    config.memory_limit_bytes = opts.memory_limit_bytes;
    config.use_heuristic = opts.use_heuristic;
    config.seed = seed;
    config.eval_set = opts.anytime_eval;

    if (b == "ES") {
        EsResult es = run_es(train, cost, mode, config, seed);
        out.policy = std::move(es.policy);
        out.stats = es.stats;
        out.log = std::move(es.log);
        return out;
    }

    ProbEstimator est(train, mode);
    if (b == "SP") config.sp_hook = make_sp_hook(SpConfig{});
    AoResult ao = run_ao(est, cost, config);
    out.policy = std::move(ao.policy);
    out.stats = ao.stats;
    out.log = std::move(ao.log);
    if (b == "PPP") out.policy = ppp_ao(std::move(out.policy), est, cost);
    return out;
}

namespace {

struct CellResult {
    bool ok = false;
    std::string error;
    double v_test = 0;
    std::vector<double> per_example;
    double seconds = 0;
    long long bytes = 0;
    SearchStats stats;
    std::vector<AnytimeRecord> log;
};

std::string sanitize(const std::string& name) {
    std::string out;
    for (char c : name) {
        if (c == '*') out += "star";
        else if (c == '/' || c == ' ') out += '_';
        else out += c;
    }
    return out;
}

void write_anytime_csv(const std::filesystem::path& path, const std::vector<AnytimeRecord>& log) {
    std::ofstream out(path, std::ios::binary);
    out << "iter,v_real_train,v_opt_train,v_test,nodes,bytes\n";
    for (const auto& r : log) {
        out << r.iter << ',' << fmt_double(r.v_real_train) << ',' << fmt_double(r.v_opt_train)
            << ',' << (r.v_test ? fmt_double(*r.v_test) : "") << ',' << r.nodes << ','
            << r.bytes << '\n';
    }
}

}  // namespace

SweepOutcome run_sweep(const SweepSpec& spec) {
    namespace fs = std::filesystem;
    fs::create_directories(spec.out_dir);

    struct Cell {
        int domain, level, replica, alg;
    };
    std::vector<Cell> cells;
    for (int d = 0; d < static_cast<int>(spec.domains.size()); ++d) {
        std::vector<int> reps = spec.replica_ids;
        if (reps.empty())
            for (int r = 0; r < static_cast<int>(spec.domains[d].replicas.size()); ++r)
                reps.push_back(r);
        for (int level : spec.levels)
            for (int r : reps)
                for (int a = 0; a < static_cast<int>(spec.algorithms.size()); ++a)
                    cells.push_back({d, level, r, a});
    }

    std::vector<CellResult> results(cells.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            const Cell& c = cells[i];
            CellResult& res = results[i];
            try {
                const SweepDomain& dom = spec.domains[c.domain];
                const Replica& rep = dom.replicas[c.replica];
                Dataset train = subset(dom.data, rep.train);
                Dataset test = subset(dom.data, rep.test);
                CostModel cost = make_cost_model(dom.data, dom.mc_by_level.at(c.level - 1));
                const std::string& alg = spec.algorithms[c.alg];
                uint64_t run_seed = mix_seed(spec.seed, c.domain * 100 + c.level,
                                             static_cast<uint64_t>(c.replica),
                                             static_cast<uint64_t>(c.alg));
                TrainOptions opts = spec.train_opts;
                if (spec.write_anytime && is_systematic(alg) && base_name(alg) != "ES")
                    opts.anytime_eval = test.examples;
                auto t0 = std::chrono::steady_clock::now();
                TrainResult tr = train_algorithm(alg, train, cost, run_seed, opts);
                auto t1 = std::chrono::steady_clock::now();
                EvalResult ev = evaluate(*tr.policy, test.examples, cost);
                res.seconds = std::chrono::duration<double>(t1 - t0).count();
                res.v_test = ev.v_test;
                res.per_example = std::move(ev.per_example);
                res.bytes = tr.stats.bytes;
                res.stats = tr.stats;
                res.log = std::move(tr.log);
                res.ok = true;
            } catch (const std::exception& e) {
                res.error = e.what();  // recorded; the sweep continues
            }
        }
    };
    int jobs = std::max(1, spec.jobs);
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    SweepOutcome outcome;
    outcome.runs = static_cast<long>(cells.size());

    // summary.csv: one row per run
    std::ofstream summary(spec.out_dir / "summary.csv", std::ios::binary);
    summary << "domain,level,replica,algorithm,v_test,seconds,bytes,status\n";
    std::map<std::tuple<int, int, int>, std::map<int, size_t>> by_cell;  // (d,lvl,rep) -> alg->idx
    for (size_t i = 0; i < cells.size(); ++i) {
        const Cell& c = cells[i];
        const CellResult& r = results[i];
        if (!r.ok) ++outcome.failures;
        summary << spec.domains[c.domain].name << ',' << c.level << ',' << c.replica << ','
                << spec.algorithms[c.alg] << ',' << (r.ok ? fmt_double(r.v_test) : "") << ','
                << fmt_double(r.seconds) << ',' << r.bytes << ','
                << (r.ok ? "ok" : "error: " + r.error) << '\n';
        by_cell[{c.domain, c.level, c.replica}][c.alg] = i;
        if (r.ok && !r.log.empty()) {
            std::string run = spec.domains[c.domain].name + "_" +
                              sanitize(spec.algorithms[c.alg]) + "_L" +
                              std::to_string(c.level) + "_r" + std::to_string(c.replica);
            write_anytime_csv(spec.out_dir / ("anytime_" + run + ".csv"), r.log);
        }
    }
    summary.close();

    // pairwise bootstrap comparisons per cell
    std::vector<GameRecord> games;
    for (const auto& [key, algs] : by_cell) {
        auto [d, level, rep] = key;
        for (auto it1 = algs.begin(); it1 != algs.end(); ++it1) {
            for (auto it2 = std::next(it1); it2 != algs.end(); ++it2) {
                const CellResult& r1 = results[it1->second];
                const CellResult& r2 = results[it2->second];
                if (!r1.ok || !r2.ok) continue;
                uint64_t cmp_seed = mix_seed(spec.seed ^ 0xb007u, d * 100 + level,
                                             static_cast<uint64_t>(rep),
                                             static_cast<uint64_t>(it1->first * 64 + it2->first));
                auto cmp = bdeltacost(r1.per_example, r2.per_example, spec.resamples,
                                      spec.confidence, cmp_seed);
                games.push_back({spec.algorithms[it1->first], spec.algorithms[it2->first],
                                 spec.domains[d].name, cmp.result});
                ++outcome.comparisons;
            }
        }
    }
    ChessTable chess = chess_scores(games);
    {
        std::ofstream out(spec.out_dir / "chess.csv", std::ios::binary);
        out << "kind,domain,alg1,alg2,wins,ties,losses,score,tie_score\n";
        for (const auto& [key, s] : chess.pairs) {
            const auto& [a1, a2, dom] = key;
            out << "pair," << dom << ',' << a1 << ',' << a2 << ',' << s.wins << ',' << s.ties
                << ',' << s.losses << ',' << fmt_double(s.score()) << ",\n";
        }
        for (const auto& [key, score] : chess.overall) {
            const auto& [alg, dom] = key;
            out << "overall," << dom << ',' << alg << ",,,,," << fmt_double(score) << ','
                << fmt_double(chess.tie_score(alg, dom)) << '\n';
        }
    }

    // pair graphs for the first two algorithms, per domain and level,
    // replicas sorted by the first algorithm's V_test
    if (spec.algorithms.size() >= 2) {
        for (int d = 0; d < static_cast<int>(spec.domains.size()); ++d) {
            for (int level : spec.levels) {
                struct Row {
                    int replica;
                    double v1, v2;
                    std::string cmp;
                };
                std::vector<Row> rows;
                for (const auto& [key, algs] : by_cell) {
                    auto [kd, klevel, krep] = key;
                    if (kd != d || klevel != level) continue;
                    if (!algs.count(0) || !algs.count(1)) continue;
                    const CellResult& r1 = results.at(algs.at(0));
                    const CellResult& r2 = results.at(algs.at(1));
                    if (!r1.ok || !r2.ok) continue;
                    uint64_t cmp_seed = mix_seed(spec.seed ^ 0xb007u, d * 100 + level,
                                                 static_cast<uint64_t>(krep), 1);
                    auto cmp = bdeltacost(r1.per_example, r2.per_example, spec.resamples,
                                          spec.confidence, cmp_seed);
                    rows.push_back({krep, r1.v_test, r2.v_test, comp_result_str(cmp.result)});
                }
                if (rows.empty()) continue;
                std::stable_sort(rows.begin(), rows.end(),
                                 [](const Row& a, const Row& b) { return a.v1 < b.v1; });
                std::ofstream out(spec.out_dir / ("pairs_" + spec.domains[d].name + "_" +
                                                  std::to_string(level) + ".csv"),
                                  std::ios::binary);
                out << "v_test_" << sanitize(spec.algorithms[0]) << ",v_test_"
                    << sanitize(spec.algorithms[1]) << ",replica,result\n";
                for (const auto& r : rows)
                    out << fmt_double(r.v1) << ',' << fmt_double(r.v2) << ',' << r.replica << ','
                        << r.cmp << '\n';
            }
        }
    }

    // memory and CPU means across replicas
    std::map<std::tuple<int, int, int>, std::pair<double, long>> mem_acc, cpu_acc;
    for (size_t i = 0; i < cells.size(); ++i) {
        if (!results[i].ok) continue;
        auto key = std::make_tuple(cells[i].domain, cells[i].level, cells[i].alg);
        mem_acc[key].first += static_cast<double>(results[i].bytes);
        mem_acc[key].second += 1;
        cpu_acc[key].first += results[i].seconds;
        cpu_acc[key].second += 1;
    }
    auto write_means = [&](const fs::path& path, const char* column, const auto& acc) {
        std::ofstream out(path, std::ios::binary);
        out << "domain,level,algorithm," << column << '\n';
        for (const auto& [key, v] : acc) {
            auto [d, level, a] = key;
            out << spec.domains[d].name << ',' << level << ',' << spec.algorithms[a] << ','
                << fmt_double(v.first / static_cast<double>(v.second)) << '\n';
        }
    };
    write_means(spec.out_dir / "memory.csv", "mean_bytes", mem_acc);
    write_means(spec.out_dir / "cpu.csv", "mean_seconds", cpu_acc);
    return outcome;
}

}  // namespace costdiag

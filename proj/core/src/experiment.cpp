#include "jcm/experiment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "jcm/baselines.hpp"
#include "jcm/datagen.hpp"
#include "jcm/metrics.hpp"
#include "jcm/oracle.hpp"
#include "jcm/pipeline.hpp"
#include "jcm/rng.hpp"
#include "jcm/vilb.hpp"

namespace jcm {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("invalid value for " + key + ": " + v);
    }
}

int parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const int i = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw ConfigError("invalid value for " + key + ": " + v);
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long u = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return static_cast<std::uint64_t>(u);
    } catch (const std::exception&) {
        throw ConfigError("invalid value for " + key + ": " + v);
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("invalid value for " + key + ": " + v);
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    for (const auto& item : split_list(v)) out.push_back(parse_int(key, item));
    if (out.empty()) throw ConfigError("empty list for " + key);
    return out;
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.scheme == Scheme::RectQAM) {
        const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(cfg.order))));
        if (cfg.order < 4 || side * side != cfg.order || (side & (side - 1)) != 0)
            throw ConfigError("invalid value for order: must be an even power of two for qam");
    } else if (cfg.order != 2) {
        throw ConfigError("invalid value for order: bpsk requires order = 2");
    }
    if (cfg.n < 1) throw ConfigError("invalid value for n");
    if (cfg.snr_db.empty()) throw ConfigError("empty list for snr_db");
    if (!cfg.lambdas.empty() && cfg.lambdas.size() != 1 && cfg.lambdas.size() != cfg.snr_db.size())
        throw ConfigError("invalid value for lambda: give one value or one per snr_db entry");
    if (cfg.epochs < 0) throw ConfigError("invalid value for epochs");
    if (cfg.batch_size < 1) throw ConfigError("invalid value for batch_size");
    if (cfg.dataset != "gmm" && cfg.dataset != "toyimg")
        throw ConfigError("invalid value for dataset: " + cfg.dataset);
    if (cfg.k < 2) throw ConfigError("invalid value for k");
    if (cfg.num_classes < 2) throw ConfigError("invalid value for classes");
    if (cfg.train_per_class < 1) throw ConfigError("invalid value for train_per_class");
    if (cfg.val_per_class < 1) throw ConfigError("invalid value for val_per_class");
    if (cfg.seeds.empty()) throw ConfigError("empty list for seeds");
    if (cfg.methods.empty()) throw ConfigError("empty list for methods");
    for (const auto& m : cfg.methods)
        if (m != "jcm" && m != "analog" && m != "uniform" && m != "nn" && m != "hardsoft")
            throw ConfigError("invalid value for methods: " + m);
    if (cfg.rho <= 0.0) throw ConfigError("invalid value for rho");
    if (cfg.power <= 0.0) throw ConfigError("invalid value for power");
    if (cfg.eval_noise_draws < 1) throw ConfigError("invalid value for eval_noise_draws");
    if (cfg.draws_per_step < 1) throw ConfigError("invalid value for draws_per_step");
    if (cfg.hs_temperature <= 0.0) throw ConfigError("invalid value for hs_temperature");
    // Every cell must have a resolvable lambda before any run starts.
    for (std::size_t i = 0; i < cfg.snr_db.size(); ++i) (void)cfg.resolve_lambda(i);
}

}  // namespace

double ExperimentConfig::resolve_lambda(std::size_t snr_index) const {
    if (!lambdas.empty()) return lambdas.size() == 1 ? lambdas[0] : lambdas.at(snr_index);
    const auto v = table_lambda(scheme, snr_db.at(snr_index));
    if (!v)
        throw ConfigError("invalid value for lambda: no table entry for snr_db=" +
                          std::to_string(snr_db.at(snr_index)) + ", set lambda explicitly");
    return *v;
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("malformed line (expected key=value): " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("malformed line (empty key): " + line);

        if (key == "scheme") {
            if (val == "bpsk") {
                cfg.scheme = Scheme::BPSK;
                cfg.order = 2;
            } else if (val == "qam") {
                cfg.scheme = Scheme::RectQAM;
            } else {
                throw ConfigError("invalid value for scheme: " + val);
            }
        } else if (key == "order") {
            cfg.order = parse_int(key, val);
        } else if (key == "n") {
            cfg.n = parse_int(key, val);
        } else if (key == "snr_db") {
            cfg.snr_db.clear();
            for (const auto& item : split_list(val)) cfg.snr_db.push_back(parse_double(key, item));
        } else if (key == "lambda") {
            cfg.lambdas.clear();
            for (const auto& item : split_list(val)) cfg.lambdas.push_back(parse_double(key, item));
        } else if (key == "rho") {
            cfg.rho = parse_double(key, val);
        } else if (key == "epochs") {
            cfg.epochs = parse_int(key, val);
        } else if (key == "batch_size") {
            cfg.batch_size = parse_int(key, val);
        } else if (key == "enc_hidden") {
            cfg.enc_hidden = parse_int_list(key, val);
        } else if (key == "dec_s_hidden") {
            cfg.dec_s_hidden = parse_int_list(key, val);
        } else if (key == "dec_o_hidden") {
            cfg.dec_o_hidden = parse_int_list(key, val);
        } else if (key == "dataset") {
            cfg.dataset = val;
        } else if (key == "k") {
            cfg.k = parse_int(key, val);
        } else if (key == "classes") {
            cfg.num_classes = parse_int(key, val);
        } else if (key == "train_per_class") {
            cfg.train_per_class = parse_int(key, val);
        } else if (key == "val_per_class") {
            cfg.val_per_class = parse_int(key, val);
        } else if (key == "sigma_c") {
            cfg.sigma_c = parse_double(key, val);
        } else if (key == "image_side") {
            cfg.image_side = parse_int(key, val);
        } else if (key == "image_noise") {
            cfg.image_noise = parse_double(key, val);
        } else if (key == "dataset_seed") {
            cfg.dataset_seed = parse_u64(key, val);
        } else if (key == "seeds") {
            cfg.seeds.clear();
            for (const auto& item : split_list(val)) cfg.seeds.push_back(parse_u64(key, item));
        } else if (key == "methods") {
            cfg.methods = split_list(val);
        } else if (key == "outdir") {
            cfg.outdir = val;
        } else if (key == "eval_noise_draws") {
            cfg.eval_noise_draws = parse_int(key, val);
        } else if (key == "alternate_updates") {
            cfg.alternate_updates = parse_bool(key, val);
        } else if (key == "draws_per_step") {
            cfg.draws_per_step = parse_int(key, val);
        } else if (key == "hs_temperature") {
            cfg.hs_temperature = parse_double(key, val);
        } else if (key == "power") {
            cfg.power = parse_double(key, val);
        } else {
            throw ConfigError("unknown key: " + key);
        }
    }
    validate_config(cfg);
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << is.rdbuf();
    return parse_config_text(buf.str());
}

namespace {

std::pair<Dataset, Dataset> build_datasets(const ExperimentConfig& cfg) {
    const int per_class = cfg.train_per_class + cfg.val_per_class;
    Dataset full = cfg.dataset == "gmm"
                       ? gen_gaussian_mixture(cfg.k, cfg.num_classes, per_class, cfg.sigma_c,
                                              cfg.dataset_seed)
                       : gen_toy_images(cfg.image_side, cfg.num_classes, per_class,
                                        cfg.image_noise, cfg.dataset_seed);
    return split_dataset(full, cfg.train_per_class);
}

JCMConfig jcm_config_for(const ExperimentConfig& cfg, double snr, double lambda, int source_dim) {
    JCMConfig mc;
    mc.scheme = cfg.scheme;
    mc.order = cfg.order;
    mc.n = cfg.n;
    mc.source_dim = source_dim;
    mc.num_classes = cfg.num_classes;
    mc.enc_hidden = cfg.enc_hidden;
    mc.dec_s_hidden = cfg.dec_s_hidden;
    mc.dec_o_hidden = cfg.dec_o_hidden;
    mc.rho = cfg.rho;
    mc.lambda = lambda;
    mc.snr_db = snr;
    mc.power = cfg.power;
    return mc;
}

TrainOptions train_options_for(const ExperimentConfig& cfg, std::uint64_t seed,
                               const std::string& epoch_csv) {
    TrainOptions opts;
    opts.epochs = cfg.epochs;
    opts.batch_size = cfg.batch_size;
    opts.seed = seed;
    opts.draws_per_step = cfg.draws_per_step;
    opts.alternate_updates = cfg.alternate_updates;
    opts.val_noise_draws = 1;
    opts.epoch_csv = epoch_csv;
    return opts;
}

std::string format_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::uint64_t snr_bits(double snr) { return std::bit_cast<std::uint64_t>(snr); }

struct ResultRow {
    std::string method;
    double snr_db = 0.0;
    std::uint64_t seed = 0;
    double lambda = 0.0;
    double accuracy = 0.0;
    double psnr_db = 0.0;
    double final_loss = 0.0;
};

std::string fresh_path(const std::string& dir, const std::string& file) {
    const std::string path = (std::filesystem::path(dir) / file).string();
    std::filesystem::remove(path);
    return path;
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg_in) {
    ExperimentConfig cfg = cfg_in;
    if (const char* env = std::getenv("JCM_SEED")) cfg.seeds = {parse_u64("JCM_SEED", env)};

    std::filesystem::create_directories(cfg.outdir);
    const auto [train_ds, val_ds] = build_datasets(cfg);
    const int source_dim = train_ds.k;
    save_dataset(train_ds, (std::filesystem::path(cfg.outdir) / "dataset_train.jcmd").string());
    save_dataset(val_ds, (std::filesystem::path(cfg.outdir) / "dataset_val.jcmd").string());

    std::vector<ResultRow> rows;
    bool nan_abort = false;

    for (std::size_t si = 0; si < cfg.snr_db.size() && !nan_abort; ++si) {
        const double snr = cfg.snr_db[si];
        const double lambda = cfg.resolve_lambda(si);
        for (std::size_t ki = 0; ki < cfg.seeds.size() && !nan_abort; ++ki) {
            const std::uint64_t seed = cfg.seeds[ki];

            // One trained analog system serves analog, uniform, and nn cells.
            std::optional<BaselineModel> analog;
            std::optional<double> analog_final_loss;
            const auto ensure_analog = [&]() {
                if (analog) return;
                const JCMConfig mc = jcm_config_for(cfg, snr, lambda, source_dim);
                analog = make_baseline_model(BaselineKind::Analog, mc,
                                             mix_seed({seed, 0xA11ULL, snr_bits(snr)}));
                const std::string log = fresh_path(
                    cfg.outdir, "epochs_analog_snr" + format_g(snr) + "_seed" + std::to_string(seed) + ".csv");
                const TrainResult tr = train_baseline(
                    *analog, train_ds, val_ds,
                    train_options_for(cfg, mix_seed({seed, 0xA17ULL, snr_bits(snr)}), log));
                if (tr.nan_abort) nan_abort = true;
                analog_final_loss = tr.epochs.empty() ? 0.0 : tr.epochs.back().train_loss;
                analog->params.save((std::filesystem::path(cfg.outdir) /
                                     ("ckpt_analog_snr" + format_g(snr) + "_seed" +
                                      std::to_string(seed) + ".jcmp"))
                                        .string());
            };

            for (const std::string& method : cfg.methods) {
                if (nan_abort) break;
                ResultRow row;
                row.method = method;
                row.snr_db = snr;
                row.seed = seed;
                row.lambda = lambda;
                const std::uint64_t eval_seed = mix_seed({seed, 0xE7A1ULL, snr_bits(snr)});

                if (method == "jcm") {
                    const JCMConfig mc = jcm_config_for(cfg, snr, lambda, source_dim);
                    JCMModel model = make_jcm_model(mc, mix_seed({seed, 0x1CULL, snr_bits(snr)}));
                    const std::string log = fresh_path(
                        cfg.outdir,
                        "epochs_jcm_snr" + format_g(snr) + "_seed" + std::to_string(seed) + ".csv");
                    const TrainResult tr =
                        train(model, train_ds, val_ds,
                              train_options_for(cfg, mix_seed({seed, 0x1DULL, snr_bits(snr)}), log));
                    if (tr.nan_abort) {
                        nan_abort = true;
                        break;
                    }
                    const EvalMetrics m = evaluate(model, val_ds, cfg.eval_noise_draws, eval_seed);
                    row.accuracy = m.accuracy;
                    row.psnr_db = m.psnr_db;
                    row.final_loss = m.mean_loss;
                    model.params.save((std::filesystem::path(cfg.outdir) /
                                       ("ckpt_jcm_snr" + format_g(snr) + "_seed" +
                                        std::to_string(seed) + ".jcmp"))
                                          .string());
                    if (cfg.scheme == Scheme::RectQAM && ki == 0) {
                        const std::vector<int> usage = collect_symbol_usage(
                            model, val_ds, cfg.eval_noise_draws,
                            mix_seed({seed, 0x5AULL, snr_bits(snr)}));
                        const ShapingReport report =
                            make_shaping_report(model.constellation, usage, snr);
                        write_shaping_report(report, (std::filesystem::path(cfg.outdir) /
                                                      ("shaping_" + format_g(snr) + ".json"))
                                                         .string());
                    }
                } else if (method == "hardsoft") {
                    const JCMConfig mc = jcm_config_for(cfg, snr, lambda, source_dim);
                    BaselineModel model =
                        make_baseline_model(BaselineKind::HardSoftQuant, mc,
                                            mix_seed({seed, 0x45ULL, snr_bits(snr)}), cfg.hs_temperature);
                    const std::string log = fresh_path(
                        cfg.outdir, "epochs_hardsoft_snr" + format_g(snr) + "_seed" +
                                        std::to_string(seed) + ".csv");
                    const TrainResult tr = train_baseline(
                        model, train_ds, val_ds,
                        train_options_for(cfg, mix_seed({seed, 0x46ULL, snr_bits(snr)}), log));
                    if (tr.nan_abort) {
                        nan_abort = true;
                        break;
                    }
                    const EvalMetrics m = evaluate_baseline(model, BaselineKind::HardSoftQuant,
                                                            val_ds, cfg.eval_noise_draws, eval_seed);
                    row.accuracy = m.accuracy;
                    row.psnr_db = m.psnr_db;
                    row.final_loss = m.mean_loss;
                    model.params.save((std::filesystem::path(cfg.outdir) /
                                       ("ckpt_hardsoft_snr" + format_g(snr) + "_seed" +
                                        std::to_string(seed) + ".jcmp"))
                                          .string());
                } else {
                    ensure_analog();
                    if (nan_abort) break;
                    EvalMetrics m;
                    if (method == "analog") {
                        m = evaluate_baseline(*analog, BaselineKind::Analog, val_ds,
                                              cfg.eval_noise_draws, eval_seed);
                    } else if (method == "uniform") {
                        m = evaluate_baseline(*analog, BaselineKind::UniformQuant, val_ds,
                                              cfg.eval_noise_draws, eval_seed);
                    } else {  // nn
                        const std::vector<double> corpus = encoder_output_corpus(*analog, train_ds);
                        const LearnedQuantizer lq =
                            learned_quantizer_train(corpus, analog->constellation.side());
                        m = evaluate_baseline(*analog, BaselineKind::LearnedQuant, val_ds,
                                              cfg.eval_noise_draws, eval_seed, &lq);
                    }
                    row.accuracy = m.accuracy;
                    row.psnr_db = m.psnr_db;
                    row.final_loss = m.mean_loss;
                }
                rows.push_back(row);
            }
        }
    }

    if (nan_abort) return 3;

    std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        if (a.method != b.method) return a.method < b.method;
        if (a.snr_db != b.snr_db) return a.snr_db < b.snr_db;
        return a.seed < b.seed;
    });

    const std::string scheme_name = cfg.scheme == Scheme::BPSK ? "bpsk" : "qam";
    const double rate = transmission_rate(cfg.n, source_dim);
    std::ofstream os((std::filesystem::path(cfg.outdir) / "results.csv").string(),
                     std::ios::trunc);
    if (!os) throw std::runtime_error("run_experiment: cannot write results.csv");
    os << "method,scheme,M,n,rate,snr_db,lambda,seed,accuracy,psnr_db,final_loss\r\n";
    for (const auto& r : rows) {
        os << r.method << ',' << scheme_name << ',' << cfg.order << ',' << cfg.n << ','
           << format_g(rate) << ',' << format_g(r.snr_db) << ',' << format_g(r.lambda) << ','
           << r.seed << ',' << format_g(r.accuracy) << ',' << format_g(r.psnr_db) << ','
           << format_g(r.final_loss) << "\r\n";
    }
    return 0;
}

// ---- Verification suites ----------------------------------------------------

bool all_pass(const std::vector<CheckResult>& checks) {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

std::vector<CheckResult> run_gradcheck_suite(std::uint64_t seed) {
    std::vector<CheckResult> checks;
    struct Case {
        Scheme scheme;
        int order;
        const char* name;
    };
    const Case cases[] = {{Scheme::BPSK, 2, "bpsk"}, {Scheme::RectQAM, 4, "qam4"},
                          {Scheme::RectQAM, 16, "qam16"}};
    for (const auto& c : cases) {
        JCMConfig mc;
        mc.scheme = c.scheme;
        mc.order = c.order;
        mc.n = 4;
        mc.source_dim = 6;
        mc.num_classes = 3;
        mc.enc_hidden = {8};
        mc.dec_s_hidden = {8};
        mc.dec_o_hidden = {8};
        mc.rho = 1.5;
        mc.lambda = 5.0;
        mc.snr_db = 6.0;
        JCMModel model = make_jcm_model(mc, mix_seed({seed, static_cast<std::uint64_t>(c.order)}));

        const int batch = 3;
        Rng rng(mix_seed({seed, 0xDA7AULL, static_cast<std::uint64_t>(c.order)}));
        Mat x(batch, mc.source_dim);
        for (auto& v : x.data) v = rng.uniform();
        std::vector<int> labels(batch);
        for (auto& l : labels) l = static_cast<int>(rng.next_u64() % mc.num_classes);
        const Mat gn = sample_gumbel_batch(mc, batch, mix_seed({seed, 0x6baULL}));
        const Mat cn = sample_channel_noise_batch(batch, mc.n, model.channel.sigma2,
                                                  mix_seed({seed, 0xCbaULL}));

        const auto forward = [&]() {
            ad::Tape tape;
            const ForwardArtifacts f =
                build_jcm_forward(tape, model, x, labels, gn, cn, SymbolPath::Relaxed);
            return tape.value(f.loss)(0, 0);
        };
        const auto compute_grads = [&]() {
            ad::Tape tape;
            const ForwardArtifacts f =
                build_jcm_forward(tape, model, x, labels, gn, cn, SymbolPath::Relaxed);
            tape.backward(f.loss);
        };
        const ad::GradCheckReport report = ad::gradient_check(
            model.params, model.params.names(), forward, compute_grads, 1e-4, 1e-4);

        CheckResult r;
        r.name = std::string("gradcheck ") + c.name + " max rel error (" +
                 std::to_string(report.total_coords) + " coords)";
        r.measured = report.max_rel_error;
        r.threshold = 1e-4;
        r.pass = static_cast<double>(report.bad_coords) <= 0.01 * report.total_coords;
        checks.push_back(r);
    }
    return checks;
}

std::vector<CheckResult> run_oracle_suite(std::uint64_t seed) {
    std::vector<CheckResult> checks;
    const std::vector<ToySystem> systems = reference_toy_systems();
    const double lambda = 1.0;
    const int draws = 20000;

    for (std::size_t i = 0; i < systems.size(); ++i) {
        const ToySystem& sys = systems[i];
        const std::uint64_t mi_seed = mix_seed({seed, 0x31ULL, i});
        const std::uint64_t vilb_seed = mix_seed({seed, 0x32ULL, i});
        const MutualInfoEstimates mi = mc_mutual_information(sys, draws, mi_seed);
        const DecoderFn exact = [&sys](const ComplexSequence& zhat) {
            return exact_posterior(sys, zhat);
        };
        const MCEstimate vilb = vilb_exact(sys, exact, lambda, draws, vilb_seed);

        const double se = std::hypot(vilb.std_error, mi.objective_std_error(lambda));
        CheckResult eq;
        eq.name = "bound tightness at exact posteriors, system " + std::to_string(i);
        eq.measured = std::abs(vilb.value - mi.objective(lambda)) / se;
        eq.threshold = 3.0;
        eq.pass = eq.measured < eq.threshold;
        checks.push_back(eq);

        // Perturbed decoders must fall measurably below the exact-posterior bound.
        const int L = sys.num_labels;
        const int J = static_cast<int>(sys.support.size());
        const auto mix_with_uniform = [&, L, J](double alpha) {
            return DecoderFn([&sys, alpha, L, J](const ComplexSequence& zhat) {
                PosteriorPair p = exact_posterior(sys, zhat);
                for (auto& v : p.over_labels) v = (1.0 - alpha) * v + alpha / L;
                for (auto& v : p.over_sources) v = (1.0 - alpha) * v + alpha / J;
                return p;
            });
        };
        std::vector<std::pair<std::string, DecoderFn>> perturbed;
        perturbed.emplace_back("mix50", mix_with_uniform(0.5));
        perturbed.emplace_back("mix30", mix_with_uniform(0.3));
        perturbed.emplace_back("prior", DecoderFn([&sys, L, J](const ComplexSequence&) {
                                   PosteriorPair p;
                                   p.over_labels.assign(L, 0.0);
                                   p.over_sources.resize(J);
                                   for (int j = 0; j < J; ++j) {
                                       p.over_sources[j] = sys.support[j].prior;
                                       p.over_labels[sys.support[j].label] += sys.support[j].prior;
                                   }
                                   return p;
                               }));
        perturbed.emplace_back("permuted", DecoderFn([&sys, L, J](const ComplexSequence& zhat) {
                                   PosteriorPair p = exact_posterior(sys, zhat);
                                   std::rotate(p.over_labels.begin(), p.over_labels.begin() + 1,
                                               p.over_labels.end());
                                   std::rotate(p.over_sources.begin(), p.over_sources.begin() + 1,
                                               p.over_sources.end());
                                   return p;
                               }));
        perturbed.emplace_back("wrong_sigma", DecoderFn([&sys](const ComplexSequence& zhat) {
                                   ToySystem wrong = sys;
                                   wrong.sigma2 = 4.0 * sys.sigma2;
                                   return exact_posterior(wrong, zhat);
                               }));

        for (const auto& [name, dec] : perturbed) {
            const MCEstimate v = vilb_exact(sys, dec, lambda, draws, vilb_seed);
            const double gap = vilb.value - v.value;
            const double gap_se = std::hypot(vilb.std_error, v.std_error);
            CheckResult r;
            r.name = "bound strictly below optimum, system " + std::to_string(i) + ", decoder " + name;
            r.measured = gap / gap_se;
            r.threshold = 3.0;
            r.pass = r.measured > r.threshold;
            checks.push_back(r);
        }
    }

    {  // Score-function oracle: exact enumeration vs finite differences.
        Rng rng(mix_seed({seed, 0x5cULL}));
        Mat logits(2, 2);
        for (auto& v : logits.data) v = 2.0 * rng.uniform() - 1.0;
        const Constellation bpsk = make_bpsk();
        const SequenceLoss h = [&bpsk](const std::vector<int>& z) {
            const double s0 = bpsk.points[z[0]].real();
            const double s1 = bpsk.points[z[1]].real();
            const double t = 0.7 * s0 - 0.4 * s1 - 0.3;
            return t * t + 0.25 * s0 * s1;
        };
        const Mat exact = score_function_grad_exact(logits, h);
        double max_rel = 0.0;
        const double step = 1e-5;
        Mat l2 = logits;
        for (int i = 0; i < logits.size(); ++i) {
            const double orig = l2.data[i];
            l2.data[i] = orig + step;
            const double fp = expected_loss_enumerated(l2, h);
            l2.data[i] = orig - step;
            const double fm = expected_loss_enumerated(l2, h);
            l2.data[i] = orig;
            const double fd = (fp - fm) / (2.0 * step);
            const double denom = std::max({std::abs(fd), std::abs(exact.data[i]), 1e-9});
            max_rel = std::max(max_rel, std::abs(fd - exact.data[i]) / denom);
        }
        CheckResult r;
        r.name = "score-function exact vs finite differences (n=2, M=2)";
        r.measured = max_rel;
        r.threshold = 1e-6;
        r.pass = max_rel < r.threshold;
        checks.push_back(r);

        // Constant loss: zero gradient.
        const Mat zero_grad = score_function_grad_exact(logits, [](const std::vector<int>&) {
            return 4.2;
        });
        double max_abs = 0.0;
        for (double v : zero_grad.data) max_abs = std::max(max_abs, std::abs(v));
        CheckResult rc;
        rc.name = "score-function zero mean on constant loss";
        rc.measured = max_abs;
        rc.threshold = 1e-10;
        rc.pass = max_abs < rc.threshold;
        checks.push_back(rc);

        // Monte Carlo variant agrees with enumeration within 3 SE.
        Mat se;
        const Mat mc = score_function_grad_mc(logits, h, 100000, mix_seed({seed, 0x5dULL}), &se);
        double worst = 0.0;
        for (int i = 0; i < mc.size(); ++i)
            worst = std::max(worst, std::abs(mc.data[i] - exact.data[i]) /
                                        std::max(se.data[i], 1e-12));
        CheckResult rm;
        rm.name = "score-function Monte Carlo vs exact";
        rm.measured = worst;
        rm.threshold = 3.0;
        rm.pass = worst < rm.threshold;
        checks.push_back(rm);
    }
    return checks;
}

std::vector<CheckResult> run_sample_dist_suite(int order, int num_draws, std::uint64_t seed) {
    std::vector<CheckResult> checks;
    Rng rng(mix_seed({seed, 0x7dULL}));
    double worst_tv = 0.0;
    double worst_z = -1e300;
    const double pi = 3.14159265358979323846;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> q(order);
        double sum = 0.0;
        for (auto& v : q) {
            v = rng.uniform() + 1e-3;
            sum += v;
        }
        for (auto& v : q) v /= sum;

        std::vector<double> counts(order, 0.0);
        std::vector<double> tau(order);
        for (int d = 0; d < num_draws; ++d) {
            for (auto& t : tau) t = rng.gumbel();
            ++counts[gumbel_max_sample(q, tau)];
        }
        double tv = 0.0;
        for (int m = 0; m < order; ++m) tv += std::abs(counts[m] / num_draws - q[m]);
        tv *= 0.5;
        worst_tv = std::max(worst_tv, tv);

        // Multinomial null for the TV statistic: per-category absolute
        // deviations are half-normal with variance q(1-q)/N.
        double mean_tv = 0.0, var_tv = 0.0;
        for (int m = 0; m < order; ++m) {
            const double v = q[m] * (1.0 - q[m]) / num_draws;
            mean_tv += 0.5 * std::sqrt(2.0 * v / pi);
            var_tv += 0.25 * v * (1.0 - 2.0 / pi);
        }
        worst_z = std::max(worst_z, (tv - mean_tv) / std::sqrt(var_tv));
    }
    CheckResult rz;
    rz.name = "gumbel-max TV within the multinomial null, 20 pmfs, M=" + std::to_string(order) +
              ", " + std::to_string(num_draws) + " draws";
    rz.measured = worst_z;
    rz.threshold = 6.0;
    rz.pass = worst_z < rz.threshold;
    checks.push_back(rz);
    if (order == 16 && num_draws >= 100000) {
        CheckResult r;
        r.name = "gumbel-max total variation below 0.01 (M=16, 1e5 draws)";
        r.measured = worst_tv;
        r.threshold = 0.01;
        r.pass = worst_tv < r.threshold;
        checks.push_back(r);
    }

    {  // Gumbel moments against the known mean and variance.
        Rng grng(mix_seed({seed, 0x9eULL}));
        const int n = 1000000;
        double mean = 0.0, m2 = 0.0;
        for (int i = 1; i <= n; ++i) {
            const double g = grng.gumbel();
            const double delta = g - mean;
            mean += delta / i;
            m2 += delta * (g - mean);
        }
        const double var = m2 / (n - 1);
        CheckResult rm;
        rm.name = "gumbel mean vs Euler-Mascheroni";
        rm.measured = std::abs(mean - 0.57721566490153286);
        rm.threshold = 0.01;
        rm.pass = rm.measured < rm.threshold;
        checks.push_back(rm);
        CheckResult rv;
        rv.name = "gumbel variance vs pi^2/6";
        rv.measured = std::abs(var - 1.6449340668482264);
        rv.threshold = 0.02;
        rv.pass = rv.measured < rv.threshold;
        checks.push_back(rv);
    }
    return checks;
}

std::vector<CheckResult> run_shaping_suite(const ExperimentConfig& cfg) {
    if (cfg.scheme != Scheme::RectQAM)
        throw ConfigError("invalid value for scheme: shaping requires qam");
    std::vector<CheckResult> checks;
    std::filesystem::create_directories(cfg.outdir);
    const auto [train_ds, val_ds] = build_datasets(cfg);

    for (std::size_t si = 0; si < cfg.snr_db.size(); ++si) {
        const double snr = cfg.snr_db[si];
        const double lambda = cfg.resolve_lambda(si);
        const std::uint64_t seed = cfg.seeds.front();
        JCMModel model = make_jcm_model(jcm_config_for(cfg, snr, lambda, train_ds.k),
                                        mix_seed({seed, 0x1CULL, snr_bits(snr)}));
        const TrainResult tr = train(model, train_ds, val_ds,
                                     train_options_for(cfg, mix_seed({seed, 0x1DULL, snr_bits(snr)}),
                                                       ""));
        const std::vector<int> usage = collect_symbol_usage(
            model, val_ds, std::max(4, cfg.eval_noise_draws), mix_seed({seed, 0x5AULL, snr_bits(snr)}));
        const ShapingReport report = make_shaping_report(model.constellation, usage, snr);
        write_shaping_report(report, (std::filesystem::path(cfg.outdir) /
                                      ("shaping_" + format_g(snr) + ".json"))
                                         .string());

        CheckResult fam;
        fam.name = "shaping kl(emp||MB fit) <= kl(emp||uniform) at snr " + format_g(snr) +
                   " (nu=" + format_g(report.nu) + ")";
        fam.measured = report.kl_mb - report.kl_uniform;
        fam.threshold = 1e-12;
        fam.pass = fam.measured <= fam.threshold;
        checks.push_back(fam);
        if (tr.nan_abort) {
            CheckResult bad;
            bad.name = "shaping training finished at snr " + format_g(snr);
            bad.measured = 1.0;
            bad.threshold = 0.0;
            bad.pass = false;
            checks.push_back(bad);
        }
    }
    return checks;
}

}  // namespace jcm

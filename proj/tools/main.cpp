/*
 * Copyright 2026 The crforest Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "crforest/dataset.hpp"
#include "crforest/errors.hpp"
#include "crforest/forest.hpp"
#include "crforest/metrics.hpp"
#include "crforest/model_io.hpp"
#include "crforest/random.hpp"
#include "crforest/rules.hpp"
#include "run_config.hpp"

namespace {

using namespace crforest;
using crforest::tools::RunConfig;
using nlohmann::json;

std::string fmt_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write `" + path + "`");
  out << content;
  if (!out) throw DataError("write failed for `" + path + "`");
}

Dataset load_train_data(const RunConfig& cfg) {
  if (!cfg.train_path.empty()) return load_csv(cfg.train_path, cfg.roles);
  if (cfg.synthetic) {
    SyntheticSpec spec = *cfg.synthetic;
    return simulate(spec);
  }
  throw ConfigError("no training data: set `data.train` or `synthetic`");
}

std::string predictions_csv(const std::vector<double>& preds) {
  std::string out = "row,tau_hat\n";
  for (std::size_t i = 0; i < preds.size(); ++i) {
    out += std::to_string(i) + "," + fmt_value(preds[i]) + "\n";
  }
  return out;
}

std::vector<double> read_predictions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open predictions `" + path + "`");
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty predictions file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) header.push_back(cell);
  int col = -1;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == "tau_hat") col = static_cast<int>(j);
  }
  if (col < 0) throw SchemaError("predictions file has no `tau_hat` column");
  std::vector<double> preds;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) <= col) {
      throw DataError("short row in predictions file");
    }
    try {
      preds.push_back(std::stod(cells[col]));
    } catch (const std::exception&) {
      throw DataError("bad tau_hat value `" + cells[col] + "`");
    }
  }
  return preds;
}

json atom_list_json(const CRFModel& model, const Conjunction& term) {
  json atoms = json::array();
  for (const auto& [feature, iv] : term.intervals) {
    json a;
    a["feature"] = feature;
    a["kind"] = "numeric";
    if (iv.has_lo()) a["gt"] = iv.lo;
    if (iv.has_hi()) a["le"] = iv.hi;
    atoms.push_back(a);
  }
  for (const auto& [feature, allowed] : term.members) {
    json a;
    a["feature"] = feature;
    const auto prov = model.provenance.find(feature);
    if (prov != model.provenance.end()) {
      a["kind"] = "encoded";
      a["layer"] = prov->second.first;
      a["tree"] = prov->second.second;
      json ids = json::array();
      for (const auto& level : allowed) ids.push_back(std::stoi(level));
      a["in"] = ids;
    } else {
      a["kind"] = "categorical";
      a["in"] = allowed;
    }
    atoms.push_back(a);
  }
  return atoms;
}

std::string rules_text(const std::vector<DnfRule>& rules,
                       std::size_t max_terms) {
  std::string out;
  for (std::size_t k = 0; k < rules.size(); ++k) {
    const DnfRule& rule = rules[k];
    out += "# rule " + std::to_string(k + 1) + ": leaf " +
           std::to_string(rule.leaf_id);
    if (rule.expanded) {
      out += ", terms " + std::to_string(rule.terms_before) + " -> " +
             std::to_string(rule.terms_after) + ", literals " +
             std::to_string(rule.literals_before) + " -> " +
             std::to_string(rule.literals_after) + "\n";
    } else {
      out += ": expansion exceeded " + std::to_string(max_terms) +
             " terms; encoded form shown\n";
    }
    out += format_rule(rule) + "\n";
  }
  return out;
}

json rules_json(const CRFModel& model, const std::vector<DnfRule>& rules) {
  json out;
  json arr = json::array();
  for (const auto& rule : rules) {
    json r;
    r["leaf_id"] = rule.leaf_id;
    r["cate"] = rule.cate;
    r["expanded"] = rule.expanded;
    r["terms_before"] = rule.terms_before;
    r["terms_after"] = rule.terms_after;
    r["literals_before"] = rule.literals_before;
    r["literals_after"] = rule.literals_after;
    json terms = json::array();
    for (const auto& term : rule.terms) terms.push_back(atom_list_json(model, term));
    r["terms"] = terms;
    arr.push_back(r);
  }
  out["rules"] = arr;
  return out;
}

std::string report_csv(const MetricsReport& report) {
  std::string out = "metric,value,note\n";
  auto row = [&](const char* name, const std::optional<double>& v) {
    out += std::string(name) + ",";
    if (v) {
      out += fmt_value(*v);
    } else {
      const auto it = report.unavailable.find(name);
      out += std::string(",") +
             (it == report.unavailable.end() ? "" : it->second);
      out += "\n";
      return;
    }
    out += ",\n";
  };
  row("pehe", report.pehe);
  row("eps_ate", report.eps_ate);
  row("eps_att", report.eps_att);
  row("r_pol", report.r_pol);
  return out;
}

int cmd_simulate(const SyntheticSpec& spec, const std::string& out_path) {
  const Dataset ds = simulate(spec);
  save_csv(ds, out_path);
  std::cout << "wrote " << ds.n() << " rows (" << ds.n_features()
            << " features) to " << out_path << "\n";
  return 0;
}

int cmd_fit(const RunConfig& cfg, const std::string& out_path) {
  if (out_path.empty()) {
    throw ConfigError("fit: no model output path (use -o or `output.model`)");
  }
  const Dataset ds = load_train_data(cfg);
  const auto start = std::chrono::steady_clock::now();
  const CRFModel model =
      fit_crf_ct(ds, cfg.crf, cfg.final_tree, cfg.prune, cfg.prune_folds);
  const auto elapsed = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  save_model(model, out_path);
  std::size_t layer_trees = 0, layer_leaves = 0;
  for (const auto& layer : model.layers) {
    layer_trees += layer.size();
    for (const auto& tree : layer) {
      layer_leaves += static_cast<std::size_t>(tree.leaf_count());
    }
  }
  std::cout << "fit: " << model.layers.size() << " layer(s), " << layer_trees
            << " layer trees, " << layer_leaves << " layer leaves, final tree "
            << model.final_tree.leaf_count() << " leaves"
            << (model.pruned ? " (pruned)" : "") << "\n";
  std::cout << "model written to " << out_path << " [" << std::fixed
            << elapsed << "s]\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const RunConfig& cfg, const std::string& out_path) {
  const CRFModel model = load_model(model_path);
  const Dataset ds = load_csv(data_path, cfg.roles);
  const auto preds = predict_model(model, ds);
  write_text_file(out_path, predictions_csv(preds));
  std::cout << "wrote " << preds.size() << " predictions to " << out_path << "\n";
  return 0;
}

int cmd_encode(const std::string& model_path, const std::string& data_path,
               const RunConfig& cfg, const std::string& out_path) {
  const CRFModel model = load_model(model_path);
  const Dataset ds = load_csv(data_path, cfg.roles);
  const Dataset encoded = encode_dataset(model, ds);
  save_csv(encoded, out_path);
  std::cout << "wrote " << encoded.n() << " encoded rows ("
            << encoded.n_features() << " columns) to " << out_path << "\n";
  return 0;
}

int cmd_rules(const std::string& model_path, const RunConfig& cfg,
              const std::string& out_path, const std::string& json_path) {
  const CRFModel model = load_model(model_path);
  const auto rules = rules_report(model, cfg.rules);
  const std::string text = rules_text(rules, cfg.rules.max_terms);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text_file(out_path, text);
    std::cout << "wrote " << rules.size() << " rules to " << out_path << "\n";
  }
  if (!json_path.empty()) {
    write_text_file(json_path, rules_json(model, rules).dump(1) + "\n");
  }
  return 0;
}

int eval_single(const std::vector<double>& preds, const Dataset& ds,
                const RunConfig& cfg, const std::string& out_path) {
  const MetricsReport report = evaluate(preds, ds, cfg.lambda);
  std::cout << format_report(report);
  if (!out_path.empty()) write_text_file(out_path, report_csv(report));
  return 0;
}

std::vector<std::pair<std::string, std::string>> read_manifest(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open manifest `" + path + "`");
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw DataError("manifest line needs `train,test`: " + line);
    }
    pairs.emplace_back(line.substr(0, comma), line.substr(comma + 1));
  }
  if (pairs.empty()) throw DataError("manifest has no file pairs");
  return pairs;
}

int cmd_eval_manifest(const RunConfig& cfg, const std::string& manifest_path,
                      const std::string& out_path) {
  const auto pairs = read_manifest(manifest_path);
  std::vector<MetricsReport> reports;
  std::string csv = "rep,metric,value,ci95\n";
  for (std::size_t rep = 0; rep < pairs.size(); ++rep) {
    const Dataset train = load_csv(pairs[rep].first, cfg.roles);
    const Dataset test = load_csv(pairs[rep].second, cfg.roles);
    CRFConfig crf = cfg.crf;
    crf.master_seed = mix_seed(cfg.seed, rep);
    const CRFModel model =
        fit_crf_ct(train, crf, cfg.final_tree, cfg.prune, cfg.prune_folds);
    const MetricsReport report =
        evaluate(predict_model(model, test), test, cfg.lambda);
    reports.push_back(report);
    auto cell = [&](const char* name, const std::optional<double>& v) {
      if (v) {
        csv += std::to_string(rep) + "," + name + "," + fmt_value(*v) + ",\n";
      }
    };
    cell("pehe", report.pehe);
    cell("eps_ate", report.eps_ate);
    cell("eps_att", report.eps_att);
    cell("r_pol", report.r_pol);
    std::cout << "rep " << rep << ": "
              << (report.pehe ? "pehe " + std::to_string(*report.pehe) : "")
              << (report.eps_ate ? " eps_ate " + std::to_string(*report.eps_ate)
                                 : "")
              << (report.eps_att ? " eps_att " + std::to_string(*report.eps_att)
                                 : "")
              << (report.r_pol ? " r_pol " + std::to_string(*report.r_pol) : "")
              << "\n";
  }
  std::cout << "aggregate over " << reports.size() << " repetitions:\n";
  for (const auto& agg : aggregate_reports(reports)) {
    std::cout << "  " << agg.metric << ": " << agg.mean << " ± " << agg.ci95
              << " (n=" << agg.count << ")\n";
    csv += "agg," + agg.metric + "," + fmt_value(agg.mean) + "," +
           fmt_value(agg.ci95) + "\n";
  }
  if (!out_path.empty()) write_text_file(out_path, csv);
  return 0;
}

struct SweepSetting {
  std::string knob;
  int value = 0;
};

int cmd_sweep(const RunConfig& cfg, const std::string& out_path) {
  std::vector<SweepSetting> settings;
  for (int v : cfg.sweep_trees) settings.push_back({"trees", v});
  for (int v : cfg.sweep_mtry) settings.push_back({"mtry", v});
  for (int v : cfg.sweep_nodesize) settings.push_back({"nodesize", v});
  if (settings.empty()) {
    throw ConfigError("sweep: all grids are empty (set `sweep.trees`, "
                      "`sweep.mtry` or `sweep.nodesize`)");
  }
  if (cfg.repetitions < 1) throw ConfigError("sweep: repetitions must be >= 1");
  if (!cfg.synthetic && (cfg.train_path.empty() || cfg.test_path.empty())) {
    throw ConfigError("sweep: needs `synthetic` or both data paths");
  }

  std::string csv = "knob,value,method,rep,pehe,pehe_ci95,eps_ate,eps_ate_ci95\n";
  for (std::size_t si = 0; si < settings.size(); ++si) {
    const SweepSetting& setting = settings[si];
    std::vector<MetricsReport> crf_reports, cf_reports;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      const std::uint64_t rep_seed =
          mix_seed(cfg.seed, si, static_cast<std::uint64_t>(rep));
      Dataset train, test;
      if (cfg.synthetic) {
        SyntheticSpec spec = *cfg.synthetic;
        spec.n *= 2;
        spec.seed = mix_seed(rep_seed, 0xDA7Aull);
        const Dataset both = simulate(spec);
        std::tie(train, test) = honest_split(both, 0.5, mix_seed(rep_seed, 0x51ull));
      } else {
        train = load_csv(cfg.train_path, cfg.roles);
        test = load_csv(cfg.test_path, cfg.roles);
      }

      CRFConfig crf = cfg.crf;
      crf.master_seed = rep_seed;
      TreeParams cf_params = cfg.cf_tree;
      int cf_trees = cfg.cf_trees;
      if (setting.knob == "trees") {
        crf.trees_per_layer = setting.value;
        cf_trees = setting.value;
      } else if (setting.knob == "mtry") {
        crf.tree_params.mtry = setting.value;
        cf_params.mtry = setting.value;
      } else {
        crf.tree_params.nodesize = setting.value;
        cf_params.nodesize = setting.value;
      }

      const CRFModel model =
          fit_crf_ct(train, crf, cfg.final_tree, cfg.prune, cfg.prune_folds);
      const MetricsReport crf_report =
          evaluate(predict_model(model, test), test, cfg.lambda);
      const CausalForest forest =
          forest_average_cate(train, cf_trees, cf_params,
                              cfg.crf.subsample_fraction,
                              mix_seed(rep_seed, 0xCFull), cfg.threads);
      const MetricsReport cf_report =
          evaluate(forest.predict(test), test, cfg.lambda);
      crf_reports.push_back(crf_report);
      cf_reports.push_back(cf_report);

      auto row = [&](const char* method, const MetricsReport& r) {
        csv += setting.knob + "," + std::to_string(setting.value) + "," +
               method + "," + std::to_string(rep) + "," +
               (r.pehe ? fmt_value(*r.pehe) : "") + ",," +
               (r.eps_ate ? fmt_value(*r.eps_ate) : "") + ",\n";
      };
      row("crf_ct", crf_report);
      row("cf", cf_report);
    }
    auto agg_row = [&](const char* method, const std::vector<MetricsReport>& rs) {
      double pehe_mean = 0, pehe_ci = 0, ate_mean = 0, ate_ci = 0;
      bool has_pehe = false, has_ate = false;
      for (const auto& agg : aggregate_reports(rs)) {
        if (agg.metric == "pehe") {
          pehe_mean = agg.mean;
          pehe_ci = agg.ci95;
          has_pehe = true;
        }
        if (agg.metric == "eps_ate") {
          ate_mean = agg.mean;
          ate_ci = agg.ci95;
          has_ate = true;
        }
      }
      csv += setting.knob + "," + std::to_string(setting.value) + "," + method +
             ",agg," + (has_pehe ? fmt_value(pehe_mean) : "") + "," +
             (has_pehe ? fmt_value(pehe_ci) : "") + "," +
             (has_ate ? fmt_value(ate_mean) : "") + "," +
             (has_ate ? fmt_value(ate_ci) : "") + "\n";
      std::cout << setting.knob << "=" << setting.value << " " << method
                << (has_pehe ? ": mean pehe " + std::to_string(pehe_mean) : "")
                << "\n";
    };
    agg_row("crf_ct", crf_reports);
    agg_row("cf", cf_reports);
  }
  if (!out_path.empty()) write_text_file(out_path, csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crforest: layered honest causal trees with Boolean rule reports"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset CSV");
  SyntheticSpec sim_spec;
  std::string sim_out;
  std::string sim_tau_form = "constant";
  sim->add_option("--n", sim_spec.n, "row count");
  sim->add_option("--d-num", sim_spec.d_num, "numeric feature count");
  sim->add_option("--d-cat", sim_spec.d_cat, "binary feature count");
  sim->add_option("--seed", sim_spec.seed, "generator seed");
  sim->add_option("--confounding", sim_spec.confounding_strength,
                  "logit slope of the propensity on x0");
  sim->add_option("--tau-form", sim_tau_form, "constant|step");
  sim->add_option("--tau-value", sim_spec.tau_value, "constant effect");
  sim->add_option("--tau-feature", sim_spec.tau_feature, "step feature index");
  sim->add_option("--tau-low", sim_spec.tau_low, "step effect for x <= 0");
  sim->add_option("--tau-high", sim_spec.tau_high, "step effect for x > 0");
  sim->add_option("-o,--out", sim_out, "output CSV path")->required();

  // fit
  auto* fit = app.add_subcommand("fit", "fit a model per the config");
  std::string fit_config, fit_train, fit_out;
  std::uint64_t fit_seed = 0;
  bool fit_seed_set = false;
  int fit_threads = 0;
  bool fit_threads_set = false;
  fit->add_option("--config", fit_config, "JSON config path");
  fit->add_option("--train", fit_train, "training CSV (overrides config)");
  fit->add_option("--seed", fit_seed, "master seed (overrides config)")
      ->each([&](const std::string&) { fit_seed_set = true; });
  fit->add_option("--threads", fit_threads, "fit-time workers, 0 = all cores")
      ->each([&](const std::string&) { fit_threads_set = true; });
  fit->add_option("-o,--out", fit_out, "model output path");

  // predict
  auto* pred = app.add_subcommand("predict", "predict effects for a CSV");
  std::string pred_model, pred_data, pred_out, pred_config;
  pred->add_option("--model", pred_model, "model path")->required();
  pred->add_option("--data", pred_data, "input CSV")->required();
  pred->add_option("--config", pred_config, "JSON config (column roles)");
  pred->add_option("-o,--out", pred_out, "predictions CSV path")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate effect estimates");
  std::string ev_model, ev_data, ev_preds, ev_config, ev_manifest, ev_out;
  double ev_lambda = 0.0;
  bool ev_lambda_set = false;
  std::uint64_t ev_seed = 0;
  bool ev_seed_set = false;
  ev->add_option("--model", ev_model, "model path");
  ev->add_option("--data", ev_data, "evaluation CSV");
  ev->add_option("--predictions", ev_preds, "predictions CSV (tau_hat column)");
  ev->add_option("--config", ev_config, "JSON config path");
  ev->add_option("--manifest", ev_manifest,
                 "repetition manifest: one `train,test` pair per line");
  ev->add_option("--lambda", ev_lambda, "policy threshold")
      ->each([&](const std::string&) { ev_lambda_set = true; });
  ev->add_option("--seed", ev_seed, "master seed (overrides config)")
      ->each([&](const std::string&) { ev_seed_set = true; });
  ev->add_option("-o,--out", ev_out, "report CSV path");

  // rules
  auto* rules = app.add_subcommand("rules", "extract multi-level Boolean rules");
  std::string rules_model, rules_out, rules_json_path, rules_config;
  int rules_top_k = -1;
  bool rules_no_minimize = false;
  long long rules_max_terms = -1;
  rules->add_option("--model", rules_model, "model path")->required();
  rules->add_option("--config", rules_config, "JSON config path");
  rules->add_option("--top-k", rules_top_k, "keep the k largest |CATE| rules");
  rules->add_flag("--no-minimize", rules_no_minimize, "skip DNF minimization");
  rules->add_option("--max-terms", rules_max_terms, "DNF term budget per leaf");
  rules->add_option("-o,--out", rules_out, "text report path (default stdout)");
  rules->add_option("--json", rules_json_path, "structured report path");

  // encode
  auto* enc = app.add_subcommand("encode", "export leaf encodings as CSV");
  std::string enc_model, enc_data, enc_out, enc_config;
  enc->add_option("--model", enc_model, "model path")->required();
  enc->add_option("--data", enc_data, "input CSV")->required();
  enc->add_option("--config", enc_config, "JSON config (column roles)");
  enc->add_option("-o,--out", enc_out, "encoded CSV path")->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "hyperparameter sweep harness");
  std::string sweep_config, sweep_out;
  std::uint64_t sweep_seed = 0;
  bool sweep_seed_set = false;
  sweep->add_option("--config", sweep_config, "JSON config path")->required();
  sweep->add_option("--seed", sweep_seed, "master seed (overrides config)")
      ->each([&](const std::string&) { sweep_seed_set = true; });
  sweep->add_option("-o,--out", sweep_out, "table CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (sim->parsed()) {
      if (sim_tau_form == "constant") {
        sim_spec.tau_form = TauForm::constant;
      } else if (sim_tau_form == "step") {
        sim_spec.tau_form = TauForm::step;
      } else {
        throw ConfigError("--tau-form must be constant or step");
      }
      return cmd_simulate(sim_spec, sim_out);
    }
    if (fit->parsed()) {
      RunConfig cfg = fit_config.empty() ? crforest::tools::default_config()
                                         : crforest::tools::load_config(fit_config);
      if (!fit_train.empty()) cfg.train_path = fit_train;
      if (fit_seed_set) cfg.seed = fit_seed;
      if (fit_threads_set) cfg.threads = fit_threads;
      cfg.crf.master_seed = cfg.seed;
      cfg.crf.threads = cfg.threads;
      return cmd_fit(cfg, fit_out.empty() ? cfg.out_model : fit_out);
    }
    if (pred->parsed()) {
      const RunConfig cfg = pred_config.empty()
                                ? crforest::tools::default_config()
                                : crforest::tools::load_config(pred_config);
      return cmd_predict(pred_model, pred_data, cfg, pred_out);
    }
    if (ev->parsed()) {
      RunConfig cfg = ev_config.empty() ? crforest::tools::default_config()
                                        : crforest::tools::load_config(ev_config);
      if (ev_lambda_set) cfg.lambda = ev_lambda;
      if (ev_seed_set) {
        cfg.seed = ev_seed;
        cfg.crf.master_seed = ev_seed;
      }
      if (!ev_manifest.empty()) {
        if (ev_config.empty()) {
          throw ConfigError("eval --manifest needs --config for fit settings");
        }
        return cmd_eval_manifest(cfg, ev_manifest,
                                 ev_out.empty() ? cfg.out_report : ev_out);
      }
      if (ev_data.empty()) throw ConfigError("eval needs --data");
      const Dataset ds = load_csv(ev_data, cfg.roles);
      std::vector<double> preds;
      if (!ev_preds.empty()) {
        preds = read_predictions(ev_preds);
      } else if (!ev_model.empty()) {
        preds = predict_model(load_model(ev_model), ds);
      } else {
        throw ConfigError("eval needs --model, --predictions or --manifest");
      }
      return eval_single(preds, ds, cfg, ev_out.empty() ? cfg.out_report : ev_out);
    }
    if (rules->parsed()) {
      RunConfig cfg = rules_config.empty()
                          ? crforest::tools::default_config()
                          : crforest::tools::load_config(rules_config);
      if (rules_top_k >= 0) cfg.rules.top_k = rules_top_k;
      if (rules_no_minimize) cfg.rules.minimize = false;
      if (rules_max_terms > 0) {
        cfg.rules.max_terms = static_cast<std::size_t>(rules_max_terms);
      }
      return cmd_rules(rules_model, cfg,
                       rules_out.empty() ? cfg.out_report : rules_out,
                       rules_json_path);
    }
    if (enc->parsed()) {
      const RunConfig cfg = enc_config.empty()
                                ? crforest::tools::default_config()
                                : crforest::tools::load_config(enc_config);
      return cmd_encode(enc_model, enc_data, cfg, enc_out);
    }
    if (sweep->parsed()) {
      RunConfig cfg = crforest::tools::load_config(sweep_config);
      if (sweep_seed_set) {
        cfg.seed = sweep_seed;
        cfg.crf.master_seed = sweep_seed;
      }
      return cmd_sweep(cfg, sweep_out.empty() ? cfg.out_table : sweep_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "sohklstm/config.hpp"
#include "sohklstm/data.hpp"
#include "sohklstm/errors.hpp"
#include "sohklstm/metrics.hpp"
#include "sohklstm/model.hpp"
#include "sohklstm/trainer.hpp"

using namespace sohklstm;

namespace {

using Overrides = std::vector<std::pair<std::string, std::string>>;

void add_config_flags(CLI::App* sub, std::string* config_path, Overrides* ov) {
  sub->add_option("--config", *config_path)->description("configuration file, key = value lines");
  auto reg = [sub, ov](const char* flag, const char* key, const char* desc) {
    sub->add_option(flag)->description(desc)->each(
        [ov, key](const std::string& v) { ov->emplace_back(key, v); });
  };
  reg("--model", "model", "cell type: lstm or klstm");
  reg("--hidden-size", "hidden_size", "hidden units H");
  reg("--window", "window", "input window length L");
  reg("--degree", "degree", "spline degree k");
  reg("--grid-inner", "grid_inner", "inner basis size G");
  reg("--grid-outer", "grid_outer", "outer basis size G_out");
  reg("--channels", "channels", "aggregation channels Q");
  reg("--lr", "lr", "initial learning rate");
  reg("--batch-size", "batch_size", "minibatch size");
  reg("--max-epochs", "max_epochs", "epoch cap");
  reg("--patience", "patience", "early-stop patience, 0 disables");
  reg("--lr-factor", "lr_factor", "plateau LR multiplier");
  reg("--lr-patience", "lr_patience", "epochs before LR reduction, 0 disables");
  reg("--min-lr", "min_lr", "LR floor");
  reg("--seed", "seed", "master RNG seed");
  reg("--nominal-capacity", "nominal_capacity", "nominal capacity in Ah");
  reg("--grad-clip", "grad_clip", "global gradient-norm clip, 0 disables");
  reg("--data", "data", "input cycle CSV");
  reg("--out", "out", "output artifact path");
}

RunConfig resolve_config(const std::string& config_path, const Overrides& ov) {
  RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
  for (const auto& [key, value] : ov) config_set(cfg, key, value);
  validate(cfg);
  return cfg;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw ParseError("cannot open '" + path + "' for writing");
  f << text;
  if (!f.good()) throw ParseError("write failed for '" + path + "'");
}

int cmd_gen(const std::string& profile, int cycles, std::uint64_t seed, const std::string& out,
            double nominal) {
  const std::vector<CycleRecord> records = synth_generate(seed, cycles, parse_profile(profile),
                                                          nominal);
  write_csv(out, records, nominal);
  std::cout << "wrote " << records.size() << " cycles to " << out << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, std::string report_path) {
  if (cfg.data.empty()) throw ConfigError("train needs --data (or data= in the config file)");
  if (cfg.out.empty()) throw ConfigError("train needs --out for the checkpoint path");
  if (report_path.empty()) report_path = cfg.out + ".report.txt";

  const CycleData data = load_csv(cfg.data, cfg.nominal_capacity);
  TrainOutcome outcome = train_model(cfg, data);
  save_model(outcome.model, cfg.out);
  write_text_file(report_path, outcome.report.to_text());

  const TrainReport& r = outcome.report;
  std::cout << "stop_reason=" << r.stop_reason << " epochs=" << r.train_loss.size()
            << " best_epoch=" << r.best_epoch << " best_val=" << r.best_val << "\n";
  if (r.stop_reason != "divergence") {
    std::cout << "test_rmse=" << r.test_eval.rmse << " test_mape=" << r.test_eval.mape << "\n";
  }
  std::cout << "checkpoint: " << cfg.out << "\nreport: " << report_path << "\n";
  return r.stop_reason == "divergence" ? 1 : 0;
}

struct LoadedModel {
  SOHModel model;
  SplitDatasets split;
};

LoadedModel load_for_inference(const RunConfig& cfg, const std::string& checkpoint) {
  if (cfg.data.empty()) throw ConfigError("this command needs --data");
  SOHModel model = load_model(checkpoint, shape_from(cfg));
  if (!model.scaler.fitted) {
    throw ConfigError("checkpoint '" + checkpoint + "' carries no fitted scaler");
  }
  const CycleData data = load_csv(cfg.data, cfg.nominal_capacity);
  SplitDatasets split = transform_split(model.scaler, data.records, cfg.window);
  return {std::move(model), std::move(split)};
}

int cmd_eval(const RunConfig& cfg, const std::string& checkpoint) {
  LoadedModel lm = load_for_inference(cfg, checkpoint);
  const EvalReport rep = evaluate(lm.model, lm.split.test);
  std::cout << rep.to_text();
  if (!cfg.out.empty()) write_text_file(cfg.out, rep.to_text());
  return 0;
}

int cmd_predict(const RunConfig& cfg, const std::string& checkpoint, const std::string& plot) {
  if (cfg.out.empty()) throw ConfigError("predict needs --out for the prediction CSV");
  LoadedModel lm = load_for_inference(cfg, checkpoint);

  std::string csv = "cycle_index,soh_actual,soh_pred,cap_actual,cap_pred\n";
  std::string plot_data = "# cycle_index soh_actual soh_pred\n";
  char buf[200];
  for (const Sample& s : lm.split.test.samples) {
    const Prediction p = lm.model.predict(s.window);
    const double soh_actual = lm.model.scaler.inverse(col::kSoh, s.target_soh);
    const double cap_actual = lm.model.scaler.inverse(col::kCapacity, s.target_cap);
    std::snprintf(buf, sizeof(buf), "%ld,%.10g,%.10g,%.10g,%.10g\n", s.cycle_index, soh_actual,
                  p.soh_hat, cap_actual, p.cap_hat);
    csv += buf;
    std::snprintf(buf, sizeof(buf), "%ld %.10g %.10g\n", s.cycle_index, soh_actual, p.soh_hat);
    plot_data += buf;
  }
  write_text_file(cfg.out, csv);
  if (!plot.empty()) write_text_file(plot, plot_data);
  std::cout << "wrote " << lm.split.test.samples.size() << " predictions to " << cfg.out << "\n";
  return 0;
}

int cmd_compare(const RunConfig& cfg, const std::string& ckpt_lstm,
                const std::string& ckpt_klstm) {
  if (cfg.data.empty()) throw ConfigError("compare needs --data");
  if (cfg.out.empty()) throw ConfigError("compare needs --out for the comparison report");
  const CycleData data = load_csv(cfg.data, cfg.nominal_capacity);

  RunConfig cfg_lstm = cfg;
  cfg_lstm.model = "lstm";
  RunConfig cfg_klstm = cfg;
  cfg_klstm.model = "klstm";

  TrainOutcome lstm = train_model(cfg_lstm, data);
  TrainOutcome klstm = train_model(cfg_klstm, data);
  if (!ckpt_lstm.empty()) save_model(lstm.model, ckpt_lstm);
  if (!ckpt_klstm.empty()) save_model(klstm.model, ckpt_klstm);

  if (lstm.report.stop_reason == "divergence" || klstm.report.stop_reason == "divergence") {
    const std::string text = "diverged=1\n";
    write_text_file(cfg.out, text);
    std::cerr << "a training run diverged; no comparison computed\n";
    return 1;
  }

  char buf[400];
  std::snprintf(buf, sizeof(buf),
                "lstm_rmse=%.10g\nlstm_mape=%.10g\nklstm_rmse=%.10g\nklstm_mape=%.10g\n"
                "error_reduction=%.10g\n",
                lstm.report.test_eval.rmse, lstm.report.test_eval.mape,
                klstm.report.test_eval.rmse, klstm.report.test_eval.mape,
                error_reduction(klstm.report.test_eval.rmse, lstm.report.test_eval.rmse));
  write_text_file(cfg.out, buf);
  std::cout << buf;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"State-of-health prediction with a spline-enhanced LSTM"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "generate a synthetic degradation CSV");
  std::string gen_profile, gen_out;
  int gen_cycles = 170;
  std::uint64_t gen_seed = 42;
  double gen_nominal = 2.0;
  gen->add_option("--profile", gen_profile, "groupA, groupB, or groupC")->required();
  gen->add_option("--cycles", gen_cycles, "number of cycles, at least 20");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output CSV path")->required();
  gen->add_option("--nominal", gen_nominal, "nominal capacity in Ah");

  auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
  std::string train_config, train_report;
  Overrides train_ov;
  add_config_flags(train, &train_config, &train_ov);
  train->add_option("--report", train_report)->description("report file path");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  std::string eval_config, eval_ckpt;
  Overrides eval_ov;
  add_config_flags(eval, &eval_config, &eval_ov);
  eval->add_option("--checkpoint", eval_ckpt)->description("checkpoint path")->required();

  auto* predict = app.add_subcommand("predict", "write per-cycle test predictions");
  std::string pred_config, pred_ckpt, pred_plot;
  Overrides pred_ov;
  add_config_flags(predict, &pred_config, &pred_ov);
  predict->add_option("--checkpoint", pred_ckpt)->description("checkpoint path")->required();
  predict->add_option("--plot", pred_plot)->description("gnuplot-compatible data file");

  auto* compare = app.add_subcommand("compare", "train lstm and klstm, report error reduction");
  std::string cmp_config, cmp_ckpt_lstm, cmp_ckpt_klstm;
  Overrides cmp_ov;
  add_config_flags(compare, &cmp_config, &cmp_ov);
  compare->add_option("--checkpoint-lstm", cmp_ckpt_lstm)->description("optional checkpoint path");
  compare->add_option("--checkpoint-klstm", cmp_ckpt_klstm)
      ->description("optional checkpoint path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_profile, gen_cycles, gen_seed, gen_out, gen_nominal);
    if (train->parsed()) return cmd_train(resolve_config(train_config, train_ov), train_report);
    if (eval->parsed()) return cmd_eval(resolve_config(eval_config, eval_ov), eval_ckpt);
    if (predict->parsed()) {
      return cmd_predict(resolve_config(pred_config, pred_ov), pred_ckpt, pred_plot);
    }
    if (compare->parsed()) {
      return cmd_compare(resolve_config(cmp_config, cmp_ov), cmp_ckpt_lstm, cmp_ckpt_klstm);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 2;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

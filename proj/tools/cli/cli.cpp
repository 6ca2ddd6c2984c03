// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>

#include "commands.hpp"
#include "ropeext/error.hpp"
#include "ropeext/search.hpp"

namespace ropeext::cli {

namespace {

struct GlobalFlags {
  std::string preset;
  double theta_base = 0.0;
  int head_dim = 0;
  std::int64_t pretrained_len = 0;
  std::int64_t target_len = 0;
  std::uint64_t seed = 42;
  std::string format = "text";

  CLI::Option* theta_opt = nullptr;
  CLI::Option* dim_opt = nullptr;
  CLI::Option* train_opt = nullptr;
  CLI::Option* target_opt = nullptr;
};

// Preset (or the phi3-mini defaults) first, then any explicit flag on top.
RopeConfig resolve_config(const GlobalFlags& g) {
  RopeConfig c = g.preset.empty() ? RopeConfig{} : presets::by_name(g.preset);
  if (g.theta_opt->count() > 0) c.theta_base = g.theta_base;
  if (g.dim_opt->count() > 0) c.head_dim = g.head_dim;
  if (g.train_opt->count() > 0) c.pretrained_len = g.pretrained_len;
  if (g.target_opt->count() > 0) c.target_len = g.target_len;
  c.validate();
  return c;
}

template <typename T>
void optional_value(CLI::App* app, const std::string& name, std::optional<T>& target,
                    const std::string& help) {
  app->add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"RoPE context-extension toolkit: analysis, rescale factors, factor search, "
               "needle corpora and mixed-window packing plans"};
  app.name("ropeext");
  app.fallthrough();
  app.require_subcommand(1);

  GlobalFlags g;
  app.add_option("--preset", g.preset, "Model preset: phi3-mini or llama3-8b");
  g.theta_opt = app.add_option("--theta-base", g.theta_base, "RoPE base (default 10000)");
  g.dim_opt = app.add_option("--head-dim", g.head_dim, "Attention head dimension (default 96)");
  g.train_opt = app.add_option("--pretrained-len", g.pretrained_len,
                               "Pre-trained context window (default 2048)");
  g.target_opt = app.add_option("--target-len", g.target_len,
                                "Target context window (default 131072)");
  app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--format", g.format, "Output format: text, json or csv")
      ->capture_default_str();

  AnalyzeOptions analyze;
  CLI::App* analyze_cmd = app.add_subcommand("analyze", "Per-dimension periods and critical dimensions");
  optional_value(analyze_cmd, "--decay-max-distance", analyze.decay_max_distance,
                 "Experimental: write the relative-distance decay bound up to this distance");
  analyze_cmd->add_option("--decay-out", analyze.decay_out, "CSV path for the decay bound");

  FactorsOptions factors;
  CLI::App* factors_cmd = app.add_subcommand("factors", "Generate PI, NTK or YaRN factors");
  factors_cmd->add_option("--method", factors.method, "pi, ntk or yarn")->required();
  factors_cmd->add_option("--alpha", factors.alpha, "YaRN lower bound (periods per window)")
      ->capture_default_str();
  factors_cmd->add_option("--beta", factors.beta, "YaRN upper bound (periods per window)")
      ->capture_default_str();
  optional_value(factors_cmd, "--ntk-base", factors.ntk_base,
                 "Use this base instead of the smallest one that covers the target window");
  factors_cmd->add_option("--out", factors.out, "Factor file to write");

  SearchOptions search;
  CLI::App* search_cmd = app.add_subcommand("search", "Evolutionary search for rescale factors");
  search_cmd->add_flag("--surrogate", search.surrogate,
                       "Score with the built-in surrogate objective");
  search_cmd->add_option("--surrogate-spec", search.surrogate_spec,
                         "Score with a surrogate loaded from this JSON file");
  search_cmd->add_option("--evaluator-cmd", search.evaluator_cmd,
                         "Evaluator command; frames go over its stdin/stdout");
  search_cmd->add_option("--evaluator-tcp", search.evaluator_tcp, "Evaluator at host:port");
  search_cmd->add_flag("--evaluator-concurrent", search.evaluator_concurrent,
                       "The evaluator accepts concurrent requests (enables --jobs)");
  search_cmd->add_option("--corpus", search.corpus, "Needle corpus (JSON lines)");
  search_cmd->add_flag("--inline-corpus", search.inline_corpus,
                       "Send the corpus samples inside each request instead of the path");
  search_cmd->add_option("--mode", search.mode, "NEEDLE_PPL or FULL_PPL")->capture_default_str();
  search_cmd->add_option("--timeout", search.timeout_s, "Seconds to wait for each evaluation")
      ->capture_default_str();
  search_cmd->add_option("--population", search.population, "Population size")
      ->capture_default_str();
  search_cmd->add_option("--iterations", search.iterations, "Evolution rounds")
      ->capture_default_str();
  search_cmd->add_option("--mutation-prob", search.mutation_prob, "Per-dimension mutation probability")
      ->capture_default_str();
  search_cmd->add_option("--topk", search.topk, "Parents kept each round")->capture_default_str();
  search_cmd->add_option("--jobs", search.jobs, "Parallel evaluations")->capture_default_str();
  search_cmd->add_option("--out", search.out, "Search result file")->capture_default_str();
  search_cmd->add_option("--factors-out", search.factors_out, "Searched factor file")
      ->capture_default_str();

  SynthOptions synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Build a needle retrieval corpus from books");
  synth_cmd->add_option("--books-dir", synth.books_dir, "Directory of UTF-8 text files")->required();
  synth_cmd->add_option("--samples", synth.samples, "Number of samples")->capture_default_str();
  optional_value(synth_cmd, "--target-tokens", synth.target_tokens,
                 "Tokens per sample (default: the target length)");
  synth_cmd->add_option("--out", synth.out, "Corpus file")->capture_default_str();

  PackOptions pack;
  CLI::App* pack_cmd = app.add_subcommand("pack", "Plan mixed short/long training windows");
  pack_cmd->add_option("--docs", pack.docs, "Documents (JSON lines with doc_id, token_len)")
      ->required();
  optional_value(pack_cmd, "--window", pack.window, "Window length (default: the target length)");
  pack_cmd->add_option("--quota", pack.quotas,
                       "Bucket quota max_len:fraction, repeatable; max_len inf or 0 = unbounded");
  optional_value(pack_cmd, "--total-tokens", pack.total_tokens, "Token budget shared by the quotas");
  pack_cmd->add_option("--framing-tokens", pack.framing_tokens, "BOS tokens before each short doc")
      ->capture_default_str();
  pack_cmd->add_option("--out", pack.out, "Plan file")->capture_default_str();

  ExportOptions exp;
  CLI::App* export_cmd =
      app.add_subcommand("export", "Convert a search result or factor file; compare with PI/NTK/YaRN");
  export_cmd->add_option("--from", exp.from, "Search result or factor file")->required();
  export_cmd->add_option("--out", exp.out, "Factor file to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    const Context ctx{resolve_config(g), g.preset, g.seed, parse_format(g.format), out, err};
    if (analyze_cmd->parsed()) return cmd_analyze(ctx, analyze);
    if (factors_cmd->parsed()) return cmd_factors(ctx, factors);
    if (search_cmd->parsed()) return cmd_search(ctx, search);
    if (synth_cmd->parsed()) return cmd_synth(ctx, synth);
    if (pack_cmd->parsed()) return cmd_pack(ctx, pack);
    if (export_cmd->parsed()) return cmd_export(ctx, exp);
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace ropeext::cli

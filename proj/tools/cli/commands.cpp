// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "ropeext/error.hpp"
#include "ropeext/evaluator.hpp"
#include "ropeext/json_writer.hpp"
#include "ropeext/needle.hpp"
#include "ropeext/packing.hpp"
#include "ropeext/rescale.hpp"
#include "ropeext/search.hpp"

namespace ropeext::cli {

namespace {

std::string_view format_name(Format f) {
  switch (f) {
    case Format::kJson: return "json";
    case Format::kCsv: return "csv";
    case Format::kText: break;
  }
  return "text";
}

Echo base_echo(const Context& ctx, std::string command) {
  Echo echo(std::move(command));
  echo.add("preset", ctx.preset.empty() ? std::string_view("none") : std::string_view(ctx.preset))
      .add("theta_base", ctx.config.theta_base)
      .add("head_dim", ctx.config.head_dim)
      .add("pretrained_len", ctx.config.pretrained_len)
      .add("target_len", ctx.config.target_len)
      .add("seed", ctx.seed)
      .add("format", format_name(ctx.format));
  return echo;
}

void require_format(const Context& ctx, bool csv_ok, std::string_view command) {
  if (ctx.format == Format::kCsv && !csv_ok) {
    throw Error(ErrorCode::kInvalidArgument,
                "--format csv is not available for " + std::string(command));
  }
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path + " for writing");
  out << body;
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

void print_ood(std::ostream& os, const OodReport& report, int critical) {
  os << "ood report (critical cosine index " << critical << "): ";
  if (report.clean) {
    os << "clean\n";
    return;
  }
  os << report.violating_dims.size() << " violating dims:";
  for (int i : report.violating_dims) os << ' ' << i;
  os << '\n';
}

void ood_json(JsonWriter& w, const OodReport& report) {
  w.begin_object().key("clean").value(report.clean).key("violating_dims").begin_array();
  for (int i : report.violating_dims) w.value(i);
  w.end_array().key("per_dim_ratio").array(report.per_dim_ratio).end_object();
}

}  // namespace

int cmd_analyze(const Context& ctx, const AnalyzeOptions& opts) {
  require_format(ctx, true, "analyze");
  Echo echo = base_echo(ctx, "analyze");
  if (opts.decay_max_distance) {
    if (opts.decay_out.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "--decay-max-distance needs --decay-out");
    }
    echo.add("decay_max_distance", *opts.decay_max_distance).add("decay_out", opts.decay_out);
  }
  echo.print(ctx.format, ctx.out, ctx.err);

  const RopeConfig& c = ctx.config;
  const AngleVector angles = rotation_angles(c);
  const PeriodVector t = periods(angles);
  const CriticalDim crit = theoretical_critical_dimension(c);
  std::optional<int> cov10;
  try {
    cov10 = coverage_dimension(c, 10);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateWindow) throw;
  }
  const double window = static_cast<double>(c.pretrained_len);

  if (ctx.format == Format::kCsv) {
    ctx.out << "cos_dim,theta,period,periods_per_window,ood\n";
    for (std::size_t i = 0; i < t.size(); ++i) {
      ctx.out << i << ',' << format_double(angles[i]) << ',' << format_double(t[i]) << ','
              << format_double(window / t[i]) << ','
              << (static_cast<int>(i) >= crit.cosine_index ? 1 : 0) << '\n';
    }
    ctx.err << "theoretical critical dim: full " << crit.full_index << ", cosine "
            << crit.cosine_index << '\n';
  } else if (ctx.format == Format::kJson) {
    JsonWriter w;
    w.begin_object().key("dims").begin_array();
    for (std::size_t i = 0; i < t.size(); ++i) {
      w.begin_object()
          .key("cos_dim").value(static_cast<std::int64_t>(i))
          .key("theta").value(angles[i])
          .key("period").value(t[i])
          .key("periods_per_window").value(window / t[i])
          .key("ood").value(static_cast<int>(i) >= crit.cosine_index)
          .end_object();
    }
    w.end_array()
        .key("critical_position").value(critical_position(c))
        .key("critical_full").value(crit.full_index)
        .key("critical_cos").value(crit.cosine_index)
        .key("coverage10_cos");
    if (cov10) {
      w.value(*cov10);
    } else {
      w.null();
    }
    w.key("extension_ratio").value(c.extension_ratio()).end_object();
    ctx.out << w.str() << '\n';
  } else {
    char line[160];
    std::snprintf(line, sizeof(line), "%7s  %-15s  %-15s  %-14s  %s\n", "cos_dim", "theta",
                  "period", "periods/window", "ood");
    ctx.out << line;
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::snprintf(line, sizeof(line), "%7zu  %-15.9g  %-15.9g  %-14.6g  %s\n", i, angles[i],
                    t[i], window / t[i],
                    static_cast<int>(i) >= crit.cosine_index ? "yes" : "no");
      ctx.out << line;
    }
    ctx.out << "critical position: " << fmt("%.6f", critical_position(c)) << '\n';
    ctx.out << "theoretical critical dim: full " << crit.full_index << ", cosine "
            << crit.cosine_index << '\n';
    if (cov10) {
      ctx.out << "coverage-10 dim: cosine " << *cov10 << '\n';
    } else {
      ctx.out << "coverage-10 dim: none (window shorter than ten periods of dim 0)\n";
    }
    ctx.out << "extension ratio: " << format_double(c.extension_ratio()) << '\n';
  }

  if (opts.decay_max_distance) {
    const auto curve = decay_profile(angles, *opts.decay_max_distance);
    std::string csv = "distance,bound\n";
    for (std::size_t r = 0; r < curve.size(); ++r) {
      csv += std::to_string(r) + ',' + format_double(curve[r]) + '\n';
    }
    write_file(opts.decay_out, csv);
    ctx.err << "decay profile (experimental) written to " << opts.decay_out << '\n';
  }
  return 0;
}

int cmd_factors(const Context& ctx, const FactorsOptions& opts) {
  require_format(ctx, true, "factors");
  const RopeConfig& c = ctx.config;
  const RescaleMethod method = parse_rescale_method(opts.method);
  Echo echo = base_echo(ctx, "factors");
  echo.add("method", opts.method);
  RescaleFactors f;
  switch (method) {
    case RescaleMethod::kPi:
      f = pi_factors(c);
      break;
    case RescaleMethod::kNtk: {
      const double base = opts.ntk_base.value_or(ntk_base(c));
      echo.add("ntk_base", base);
      f = factors_from_base(c, base);
      break;
    }
    case RescaleMethod::kYarn:
      echo.add("alpha", opts.alpha).add("beta", opts.beta);
      f = yarn_factors(c, YarnParams{opts.alpha, opts.beta});
      break;
    default:
      throw Error(ErrorCode::kInvalidMethod,
                  "factors generates pi, ntk or yarn; searched factors come from `search`");
  }
  echo.add("out", opts.out.empty() ? std::string_view("-") : std::string_view(opts.out));
  echo.print(ctx.format, ctx.out, ctx.err);

  const OodReport report = ood_report(f);
  if (ctx.format == Format::kCsv) {
    ctx.out << "cos_dim,lambda,ood_ratio\n";
    for (std::size_t i = 0; i < f.lambdas.size(); ++i) {
      ctx.out << i << ',' << format_double(f.lambdas[i]) << ','
              << format_double(report.per_dim_ratio[i]) << '\n';
    }
    print_ood(ctx.err, report, f.critical_cos_index);
  } else if (ctx.format == Format::kJson) {
    JsonWriter w;
    w.begin_object().key("factors").raw(factors_to_json(f)).key("ood");
    ood_json(w, report);
    w.end_object();
    ctx.out << w.str() << '\n';
  } else {
    ctx.out << "method: " << to_string(f.method) << '\n';
    char line[96];
    std::snprintf(line, sizeof(line), "%7s  %-15s  %s\n", "cos_dim", "lambda", "s/lambda");
    ctx.out << line;
    for (std::size_t i = 0; i < f.lambdas.size(); ++i) {
      std::snprintf(line, sizeof(line), "%7zu  %-15.9g  %.6g\n", i, f.lambdas[i],
                    report.per_dim_ratio[i]);
      ctx.out << line;
    }
    print_ood(ctx.out, report, f.critical_cos_index);
  }
  if (!opts.out.empty()) {
    export_factors(f, opts.out);
    ctx.err << "factors written to " << opts.out << '\n';
  }
  return 0;
}

int cmd_search(const Context& ctx, const SearchOptions& opts) {
  require_format(ctx, false, "search");
  const RopeConfig& c = ctx.config;
  const SearchParams params{opts.population, opts.iterations, opts.mutation_prob, opts.topk,
                            ctx.seed};
  params.validate();
  if (opts.jobs < 1) throw Error(ErrorCode::kInvalidArgument, "--jobs must be >= 1");

  const int chosen = int{opts.surrogate} + int{!opts.surrogate_spec.empty()} +
                     int{!opts.evaluator_cmd.empty()} + int{!opts.evaluator_tcp.empty()};
  if (chosen == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "no evaluator: pass --evaluator-cmd, --evaluator-tcp, --surrogate or "
                "--surrogate-spec");
  }
  if (chosen > 1) throw Error(ErrorCode::kInvalidArgument, "choose exactly one evaluator");
  const bool remote = !opts.evaluator_cmd.empty() || !opts.evaluator_tcp.empty();
  if (remote && opts.corpus.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "a remote evaluator needs --corpus");
  }

  Echo echo = base_echo(ctx, "search");
  echo.add("population", params.population_size)
      .add("iterations", params.iterations)
      .add("mutation_prob", params.mutation_prob)
      .add("topk", params.topk)
      .add("jobs", opts.jobs);
  std::unique_ptr<FitnessEvaluator> evaluator;
  if (opts.surrogate) {
    echo.add("evaluator", "surrogate");
    evaluator = std::make_unique<SurrogateEvaluator>(default_surrogate(c));
  } else if (!opts.surrogate_spec.empty()) {
    echo.add("evaluator", "surrogate-spec").add("surrogate_spec", opts.surrogate_spec);
    SurrogateSpec spec = load_surrogate(opts.surrogate_spec);
    if (spec.hidden_target.size() != static_cast<std::size_t>(c.half_dim())) {
      throw Error(ErrorCode::kLengthMismatch, "surrogate target length does not match head_dim/2");
    }
    evaluator = std::make_unique<SurrogateEvaluator>(std::move(spec));
  } else {
    const EvalMode mode = parse_eval_mode(opts.mode);
    const Endpoint endpoint = opts.evaluator_cmd.empty()
                                  ? Endpoint::parse("tcp://" + opts.evaluator_tcp)
                                  : Endpoint::parse("exec:" + opts.evaluator_cmd);
    echo.add("evaluator", opts.evaluator_cmd.empty() ? "tcp" : "subprocess")
        .add("endpoint", opts.evaluator_cmd.empty() ? opts.evaluator_tcp : opts.evaluator_cmd)
        .add("corpus", opts.corpus)
        .add("inline_corpus", opts.inline_corpus)
        .add("mode", to_string(mode))
        .add("timeout_s", opts.timeout_s)
        .add("evaluator_concurrent", opts.evaluator_concurrent);
    CorpusRef corpus = std::filesystem::absolute(opts.corpus).string();
    if (opts.inline_corpus) corpus = read_corpus(opts.corpus);
    const auto timeout =
        std::chrono::milliseconds(static_cast<std::int64_t>(opts.timeout_s * 1000.0));
    evaluator = std::make_unique<RemoteEvaluator>(open_channel(endpoint), std::move(corpus), mode,
                                                  timeout, opts.evaluator_concurrent);
  }
  echo.add("out", opts.out).add("factors_out", opts.factors_out);
  echo.print(ctx.format, ctx.out, ctx.err);

  EvolveOptions evolve_opts;
  evolve_opts.jobs = opts.jobs;
  SearchResult result;
  try {
    result = evolve(c, *evaluator, params, evolve_opts);
  } catch (const SearchAborted& e) {
    const SearchResult& partial = e.partial();
    const std::string partial_path = opts.out + ".partial";
    write_file(partial_path, search_result_to_json(partial) + "\n");
    ctx.err << "search aborted after " << partial.evaluations << " evaluations and "
            << partial.history.size() << " completed rounds; partial result in " << partial_path
            << '\n';
    throw;
  }

  write_file(opts.out, search_result_to_json(result) + "\n");
  const RescaleFactors factors = to_factors(result);
  export_factors(factors, opts.factors_out);

  if (ctx.format == Format::kJson) {
    ctx.out << search_result_to_json(result) << '\n';
  } else {
    ctx.out << "best fitness: " << format_double(*result.best.fitness) << '\n';
    ctx.out << "real critical dim: full " << 2 * result.best.d_rcd_cos << ", cosine "
            << result.best.d_rcd_cos << '\n';
    ctx.out << "evaluations: " << result.evaluations << '\n';
    for (std::size_t i = 0; i < result.history.size(); ++i) {
      ctx.out << "round " << i << " best " << format_double(result.history[i]) << '\n';
    }
    print_ood(ctx.out, ood_report(factors), factors.critical_cos_index);
  }
  ctx.err << "search result written to " << opts.out << ", factors to " << opts.factors_out
          << '\n';
  return 0;
}

int cmd_synth(const Context& ctx, const SynthOptions& opts) {
  require_format(ctx, false, "synth");
  if (opts.samples < 1) throw Error(ErrorCode::kInvalidArgument, "--samples must be >= 1");
  const std::int64_t target = opts.target_tokens.value_or(ctx.config.target_len);
  const WhitespaceTokenizer tokenizer;
  Echo echo = base_echo(ctx, "synth");
  echo.add("books_dir", opts.books_dir)
      .add("samples", opts.samples)
      .add("target_tokens", target)
      .add("tokenizer", tokenizer.id())
      .add("out", opts.out);
  echo.print(ctx.format, ctx.out, ctx.err);

  const std::vector<std::string> books = load_books(opts.books_dir);
  Rng rng(ctx.seed);
  const auto corpus = build_corpus(books, opts.samples, target, tokenizer, rng);
  write_corpus(corpus, opts.out);

  if (ctx.format == Format::kJson) {
    for (const auto& s : corpus) ctx.out << sample_to_json(s) << '\n';
  } else {
    ctx.out << "books: " << books.size() << ", samples: " << corpus.size() << '\n';
    for (const auto& s : corpus) {
      ctx.out << s.needle.key_word << ' ' << s.needle.magic_number << " tokens " << s.token_len
              << " answer [" << s.answer_token_span.first << ", " << s.answer_token_span.second
              << ")\n";
    }
  }
  ctx.err << "corpus written to " << opts.out << '\n';
  return 0;
}

namespace {

BucketQuota parse_quota(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "quota '" + spec + "' must be max_len:fraction");
  }
  const std::string max = spec.substr(0, colon);
  BucketQuota q;
  try {
    q.max_len = max == "inf" ? 0 : std::stoll(max);
    std::size_t used = 0;
    q.fraction = std::stod(spec.substr(colon + 1), &used);
    if (used != spec.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kInvalidArgument, "quota '" + spec + "' must be max_len:fraction");
  }
  if (q.max_len < 0) throw Error(ErrorCode::kInvalidArgument, "quota max_len must be >= 0");
  return q;
}

}  // namespace

int cmd_pack(const Context& ctx, const PackOptions& opts) {
  require_format(ctx, false, "pack");
  const std::int64_t window = opts.window.value_or(ctx.config.target_len);
  PackingOptions popts;
  popts.framing_tokens = opts.framing_tokens;
  for (const auto& q : opts.quotas) popts.quotas.push_back(parse_quota(q));
  popts.total_tokens = opts.total_tokens;

  Echo echo = base_echo(ctx, "pack");
  echo.add("docs", opts.docs).add("window", window).add("framing_tokens", opts.framing_tokens);
  std::string quota_text;
  for (const auto& q : opts.quotas) quota_text += (quota_text.empty() ? "" : ",") + q;
  echo.add("quotas", quota_text.empty() ? std::string_view("none") : std::string_view(quota_text));
  if (opts.total_tokens) echo.add("total_tokens", *opts.total_tokens);
  echo.add("out", opts.out);
  echo.print(ctx.format, ctx.out, ctx.err);

  const auto docs = read_docs(opts.docs);
  const PackingPlan plan = plan_packing(docs, window, ctx.config.pretrained_len, popts);
  write_plan(plan, opts.out);

  std::size_t n_short = 0;
  for (const auto& seg : plan.segments) n_short += seg.mode == SegmentMode::kShortOriginalRope;
  std::int64_t selected = 0;
  for (const auto& b : plan.buckets) selected += b.selected_tokens;

  if (ctx.format == Format::kJson) {
    JsonWriter w;
    w.begin_object()
        .key("segments").value(static_cast<std::int64_t>(plan.segments.size()))
        .key("short_segments").value(static_cast<std::int64_t>(n_short))
        .key("long_segments").value(static_cast<std::int64_t>(plan.segments.size() - n_short))
        .key("buckets").begin_array();
    for (const auto& b : plan.buckets) {
      w.begin_object()
          .key("max_len").value(b.max_len)
          .key("target_tokens").value(b.target_tokens)
          .key("selected_tokens").value(b.selected_tokens)
          .end_object();
    }
    w.end_array().key("unused_docs").value(static_cast<std::int64_t>(plan.unused_doc_ids.size()));
    w.end_object();
    ctx.out << w.str() << '\n';
  } else {
    ctx.out << "documents: " << docs.size() << '\n';
    ctx.out << "segments: " << plan.segments.size() << " (short " << n_short << ", long "
            << plan.segments.size() - n_short << ")\n";
    for (const auto& b : plan.buckets) {
      const double share = selected > 0 ? static_cast<double>(b.selected_tokens) / selected : 0.0;
      ctx.out << "bucket <= " << (b.max_len == 0 ? std::string("inf") : std::to_string(b.max_len))
              << ": target " << b.target_tokens << ", selected " << b.selected_tokens
              << " (share " << fmt("%.4f", share) << ")\n";
    }
    if (!plan.unused_doc_ids.empty()) {
      ctx.out << "unused documents: " << plan.unused_doc_ids.size() << '\n';
    }
  }
  ctx.err << "packing plan written to " << opts.out << '\n';
  return 0;
}

int cmd_export(const Context& ctx, const ExportOptions& opts) {
  const std::string body = read_file(opts.from);
  bool is_search_result = false;
  try {
    is_search_result = nlohmann::json::parse(body).contains("best");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, opts.from + ": " + e.what());
  }
  const RescaleFactors f =
      is_search_result ? to_factors(search_result_from_json(body)) : factors_from_json(body);
  const RopeConfig& c = f.source_config;

  // The file carries its own configuration; global config flags do not apply.
  Context file_ctx{c, "", ctx.seed, ctx.format, ctx.out, ctx.err};
  Echo echo = base_echo(file_ctx, "export");
  echo.add("from", opts.from)
      .add("input", is_search_result ? "search-result" : "factor-file")
      .add("out", opts.out.empty() ? std::string_view("-") : std::string_view(opts.out));
  echo.print(ctx.format, ctx.out, ctx.err);

  const RescaleFactors pi = pi_factors(c);
  const RescaleFactors ntk = factors_from_base(c, ntk_base(c));
  const RescaleFactors yarn = yarn_factors(c);
  const std::string label(to_string(f.method));

  if (ctx.format == Format::kCsv) {
    ctx.out << "cos_dim," << label << ",pi,ntk,yarn\n";
    for (std::size_t i = 0; i < f.lambdas.size(); ++i) {
      ctx.out << i << ',' << format_double(f.lambdas[i]) << ',' << format_double(pi.lambdas[i])
              << ',' << format_double(ntk.lambdas[i]) << ',' << format_double(yarn.lambdas[i])
              << '\n';
    }
  } else if (ctx.format == Format::kJson) {
    JsonWriter w;
    w.begin_object()
        .key("factors").raw(factors_to_json(f))
        .key("pi").array(pi.lambdas)
        .key("ntk").array(ntk.lambdas)
        .key("yarn").array(yarn.lambdas)
        .end_object();
    ctx.out << w.str() << '\n';
  } else {
    char line[128];
    std::snprintf(line, sizeof(line), "%7s  %-13s  %-13s  %-13s  %s\n", "cos_dim", label.c_str(),
                  "pi", "ntk", "yarn");
    ctx.out << line;
    for (std::size_t i = 0; i < f.lambdas.size(); ++i) {
      std::snprintf(line, sizeof(line), "%7zu  %-13.7g  %-13.7g  %-13.7g  %.7g\n", i, f.lambdas[i],
                    pi.lambdas[i], ntk.lambdas[i], yarn.lambdas[i]);
      ctx.out << line;
    }
    print_ood(ctx.out, ood_report(f), f.critical_cos_index);
  }
  if (!opts.out.empty()) {
    export_factors(f, opts.out);
    ctx.err << "factors written to " << opts.out << '\n';
  }
  return 0;
}

}  // namespace ropeext::cli

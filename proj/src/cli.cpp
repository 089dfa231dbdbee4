// Copyright (c) 2026 The emotts Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "emotts/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "CLI11.hpp"

#include "emotts/eval.hpp"
#include "emotts/inference.hpp"

namespace fs = std::filesystem;

namespace emotts {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

const std::map<std::string, std::string>& run_defaults() {
  static const std::map<std::string, std::string> defaults = [] {
    std::map<std::string, std::string> d{
        {"seed", "0"},
        {"corpus", "corpus"},
        {"run_dir", "run"},
        {"gen.per_emotion", "100"},
        {"gen.min_syllables", "4"},
        {"gen.max_syllables", "20"},
        {"gen.noise", "0.01"},
        {"ranker.C", "10"},
        {"ranker.tol", "1e-6"},
        {"ranker.max_iter", "50"},
        {"ranker.max_pairs", "5000"},
        {"classifier.epochs", "300"},
        {"classifier.lr", "0.5"},
        {"classifier.l2", "1e-4"},
        {"classifier.batch", "16"},
        {"train.steps", "2000"},
        {"train.batch", "8"},
        {"train.lr", "0.002"},
        {"train.grad_clip", "1"},
        {"train.log_every", "50"},
    };
    std::istringstream model(ModelConfig{}.to_text());
    std::string line;
    while (std::getline(model, line)) {
      const auto eq = line.find('=');
      if (line.substr(0, eq) == "seed") continue;  // follows the run seed
      d["model." + line.substr(0, eq)] = line.substr(eq + 1);
    }
    return d;
  }();
  return defaults;
}

template <class T>
T parse_as(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw Error("config: '" + text + "' is not valid for " + key);
  return v;
}

}  // namespace

RunConfig::RunConfig() : values_(run_defaults()) {}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error("config: unknown key '" + key + "'");
  it->second = value;
}

void RunConfig::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error("config: expected key=value, got '" + assignment + "'");
  }
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

void RunConfig::load_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("config file not found: " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t"), b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error("config: unknown key '" + key + "'");
  return it->second;
}

int RunConfig::get_int(const std::string& key) const { return parse_as<int>(key, get(key)); }
double RunConfig::get_double(const std::string& key) const { return parse_as<double>(key, get(key)); }
std::uint64_t RunConfig::get_u64(const std::string& key) const {
  return parse_as<std::uint64_t>(key, get(key));
}

ModelConfig RunConfig::model_config() const {
  ModelConfig c;
  for (const auto& [key, value] : values_) {
    if (key.starts_with("model.")) c.set(key.substr(6), value);
  }
  c.seed = get_u64("seed");
  c.validate();
  return c;
}

RankerOptions RunConfig::ranker_options() const {
  RankerOptions o;
  o.C = get_double("ranker.C");
  o.tol = get_double("ranker.tol");
  o.max_iter = get_int("ranker.max_iter");
  o.max_pairs = static_cast<std::size_t>(get_u64("ranker.max_pairs"));
  o.seed = get_u64("seed");
  return o;
}

ClassifierConfig RunConfig::classifier_config() const {
  ClassifierConfig c;
  c.epochs = get_int("classifier.epochs");
  c.learning_rate = get_double("classifier.lr");
  c.l2 = get_double("classifier.l2");
  c.batch_size = get_int("classifier.batch");
  c.seed = get_u64("seed");
  return c;
}

GeneratorConfig RunConfig::generator_config() const {
  GeneratorConfig g;
  g.min_syllables = get_int("gen.min_syllables");
  g.max_syllables = get_int("gen.max_syllables");
  g.noise_amplitude = get_double("gen.noise");
  g.validate();
  return g;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

// --- subcommands ---------------------------------------------------------------

namespace {

struct Context {
  RunConfig config;
  std::ostream& out;
  std::ostream& err;
  std::string command;

  fs::path run_dir() const { return config.get_path("run_dir"); }
  fs::path corpus_dir() const { return config.get_path("corpus"); }

  void log(const std::string& msg) const { err << "[" << command << "] " << msg << "\n"; }

  // Echoes the resolved config and seed, and keeps a copy in the run dir.
  void log_config(bool write_to_run_dir = true) const {
    out << "# command: " << command << "\n# seed: " << config.get("seed") << "\n";
    std::istringstream in(config.to_text());
    std::string line;
    while (std::getline(in, line)) out << "# " << line << "\n";
    if (write_to_run_dir) {
      fs::create_directories(run_dir());
      std::ofstream f(run_dir() / (command + ".config"));
      f << config.to_text();
      record(run_dir() / (command + ".config"));
    }
  }

  // Appends a produced file to the run manifest.
  void record(const fs::path& produced) const {
    fs::create_directories(run_dir());
    std::ofstream m(run_dir() / "manifest.tsv", std::ios::app);
    m << command << '\t' << produced.lexically_relative(run_dir()).generic_string() << '\n';
  }
};

struct LoadedCorpus {
  CorpusManifest manifest;
  std::vector<Utterance> utterances;
};

LoadedCorpus require_corpus(const Context& ctx) {
  const fs::path manifest = ctx.corpus_dir() / "manifest.tsv";
  if (!fs::exists(manifest)) {
    throw Error("missing corpus: no manifest at " + manifest.string() +
                " (run gen-corpus first or point --corpus at a prepared corpus)");
  }
  LoadedCorpus c;
  c.manifest = load_manifest(manifest);
  c.utterances = load_corpus(c.manifest);
  attach_truth(ctx.corpus_dir(), c.utterances);
  return c;
}

StrengthExtractor require_rankers(const Context& ctx, const CorpusManifest& manifest) {
  StrengthExtractor extractor(manifest.neutral_index());
  for (int e = 0; e < static_cast<int>(manifest.category_names.size()); ++e) {
    if (e == manifest.neutral_index()) continue;
    const fs::path p = ctx.run_dir() / "rankers" /
                       (manifest.category_names[static_cast<std::size_t>(e)] + ".rnk");
    if (fs::exists(p)) extractor.add(load_ranking_model(p));
  }
  if (extractor.models().empty()) {
    throw Error("no ranker models under " + (ctx.run_dir() / "rankers").string() +
                " (run train-ranker first)");
  }
  return extractor;
}

std::map<std::string, std::vector<double>> require_strengths(const Context& ctx) {
  const fs::path p = ctx.run_dir() / "strengths.tsv";
  std::ifstream in(p);
  if (!in) throw Error("missing " + p.string() + " (run extract-strengths first)");
  std::map<std::string, std::vector<double>> out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string id, emotion, values;
    std::getline(row, id, '\t');
    std::getline(row, emotion, '\t');
    std::getline(row, values, '\t');
    std::vector<double> s;
    std::istringstream vs(values);
    std::string tok;
    while (std::getline(vs, tok, ',')) s.push_back(std::stod(tok));
    out[id] = std::move(s);
  }
  return out;
}

const Utterance& find_utterance(const LoadedCorpus& c, const std::string& id) {
  for (const auto& u : c.utterances) {
    if (u.id == id) return u;
  }
  throw Error("no utterance with id '" + id + "' in the corpus");
}

int category_of(const CorpusManifest& m, const std::string& name) {
  const int idx = m.category_index(name);
  if (idx < 0) throw Error("unknown emotion '" + name + "'");
  return idx;
}

ModelConfig model_config_for(const Context& ctx, const LoadedCorpus& corpus) {
  ModelConfig c = ctx.config.model_config();
  c.categories = static_cast<int>(corpus.manifest.category_names.size());
  c.mel_bins = static_cast<int>(corpus.utterances.front().mel.cols());
  c.validate();
  return c;
}

LoadedCheckpoint require_checkpoint(const Context& ctx) {
  const fs::path p = ctx.run_dir() / "model.ckpt";
  if (!fs::exists(p)) throw Error("missing " + p.string() + " (run train-tts first)");
  return load_checkpoint(p);
}

// gen-corpus ---------------------------------------------------------------------

void cmd_gen_corpus(const Context& ctx, std::optional<std::uint64_t> seed_flag, const std::string& out_flag,
                    int per_emotion_flag) {
  const std::uint64_t seed = seed_flag ? *seed_flag : ctx.config.get_u64("seed");
  const fs::path dir = out_flag.empty() ? ctx.corpus_dir() : fs::path(out_flag);
  const int per = per_emotion_flag > 0 ? per_emotion_flag : ctx.config.get_int("gen.per_emotion");
  ctx.out << "# command: gen-corpus\n# seed: " << seed << "\n";
  std::istringstream in(ctx.config.to_text());
  for (std::string line; std::getline(in, line);) ctx.out << "# " << line << "\n";
  const GeneratorConfig g = ctx.config.generator_config();
  const auto corpus = generate_synthetic_corpus(seed, per, g);
  save_corpus(dir, corpus, g.categories);
  std::ofstream(dir / "gen-corpus.config") << ctx.config.to_text() << "gen.seed=" << seed << "\n";
  ctx.log("wrote " + std::to_string(corpus.size()) + " utterances to " + dir.string());
  ctx.out << "manifest\t" << (dir / "manifest.tsv").string() << "\n";
}

// prepare-corpus -------------------------------------------------------------------

void cmd_prepare_corpus(const Context& ctx) {
  const LoadedCorpus c = require_corpus(ctx);
  ctx.log_config();
  std::map<int, int> counts;
  long frames = 0;
  for (const auto& u : c.utterances) {
    ++counts[u.emotion];
    frames += u.mel.rows();
  }
  const fs::path summary = ctx.run_dir() / "corpus_summary.tsv";
  std::ofstream s(summary);
  s << "category\tutterances\n";
  for (const auto& [e, n] : counts) {
    s << c.manifest.category_names[static_cast<std::size_t>(e)] << '\t' << n << '\n';
  }
  ctx.record(summary);
  ctx.out << "utterances\t" << c.utterances.size() << "\nframes\t" << frames << "\n";
  ctx.log("manifest ok: " + std::to_string(c.utterances.size()) + " utterances, " +
          std::to_string(c.manifest.category_names.size()) + " categories");
}

// train-ranker -------------------------------------------------------------------

void cmd_train_ranker(const Context& ctx, const std::string& emotion) {
  const LoadedCorpus c = require_corpus(ctx);
  ctx.log_config();
  const int neutral = c.manifest.neutral_index();
  std::vector<int> targets;
  if (emotion == "all") {
    for (int e = 0; e < static_cast<int>(c.manifest.category_names.size()); ++e) {
      if (e != neutral) targets.push_back(e);
    }
  } else {
    const int e = category_of(c.manifest, emotion);
    if (e == neutral) throw Error("neutral is the reference category and has no ranker");
    targets.push_back(e);
  }
  const fs::path dir = ctx.run_dir() / "rankers";
  fs::create_directories(dir);
  for (int e : targets) {
    NewtonTrace trace;
    const RankingModel model = fit_emotion_ranker(c.utterances, e, neutral, ctx.config.ranker_options(), &trace);
    const std::string& name = c.manifest.category_names[static_cast<std::size_t>(e)];
    save_ranking_model(dir / (name + ".rnk"), model);
    export_ranking_model_text(dir / (name + ".txt"), model);
    ctx.record(dir / (name + ".rnk"));
    ctx.record(dir / (name + ".txt"));
    ctx.out << name << "\titerations=" << trace.iterations
            << "\tconverged=" << (trace.converged ? "yes" : "no") << "\tobjective="
            << fmt(trace.objective.empty() ? 0.0 : trace.objective.back()) << "\n";
  }
}

// extract-strengths ------------------------------------------------------------------

void cmd_extract_strengths(const Context& ctx) {
  const LoadedCorpus c = require_corpus(ctx);
  ctx.log_config();
  const StrengthExtractor extractor = require_rankers(ctx, c.manifest);
  const fs::path path = ctx.run_dir() / "strengths.tsv";
  std::ofstream out(path);
  out << "id\temotion\tper_syllable\n";
  std::map<int, std::pair<std::vector<double>, std::vector<double>>> recovery;
  for (const auto& u : c.utterances) {
    if (u.emotion != extractor.neutral() && !extractor.has(u.emotion)) {
      throw Error("no ranker for category of " + u.id);
    }
    const auto s = extractor.extract(u);
    out << u.id << '\t' << c.manifest.category_names[static_cast<std::size_t>(u.emotion)] << '\t';
    for (std::size_t i = 0; i < s.per_syllable.size(); ++i) out << (i ? "," : "") << fmt(s.per_syllable[i]);
    out << '\n';
    if (u.truth && u.emotion != extractor.neutral()) {
      auto& [got, want] = recovery[u.emotion];
      got.insert(got.end(), s.per_syllable.begin(), s.per_syllable.end());
      want.insert(want.end(), u.truth->strengths.begin(), u.truth->strengths.end());
    }
  }
  ctx.record(path);
  if (!recovery.empty()) {
    const fs::path rpath = ctx.run_dir() / "strength_recovery.tsv";
    std::ofstream r(rpath);
    r << "emotion\tspearman\tsyllables\n";
    for (const auto& [e, pair] : recovery) {
      const double rho = spearman_correlation(pair.first, pair.second);
      const std::string& name = c.manifest.category_names[static_cast<std::size_t>(e)];
      r << name << '\t' << fmt_short(rho) << '\t' << pair.first.size() << '\n';
      ctx.out << name << "\tspearman=" << fmt_short(rho) << "\n";
    }
    ctx.record(rpath);
  }
}

// train-classifier -------------------------------------------------------------------

void cmd_train_classifier(const Context& ctx) {
  const LoadedCorpus c = require_corpus(ctx);
  ctx.log_config();
  std::vector<std::string> texts;
  std::vector<int> labels;
  for (const auto& u : c.utterances) {
    texts.push_back(u.text);
    labels.push_back(u.emotion);
  }
  const auto model = TextEmotionClassifier::train(texts, labels, c.manifest.category_names,
                                                  ctx.config.classifier_config());
  int correct = 0;
  for (std::size_t i = 0; i < texts.size(); ++i) correct += model.predict_posterior(texts[i]).argmax() == labels[i];
  const fs::path path = ctx.run_dir() / "classifier.txt";
  model.save(path);
  ctx.record(path);
  ctx.out << "train_accuracy\t" << fmt_short(static_cast<double>(correct) / static_cast<double>(texts.size())) << "\n";
}

// train-tts ------------------------------------------------------------------------

void cmd_train_tts(const Context& ctx) {
  const LoadedCorpus c = require_corpus(ctx);
  ctx.log_config();
  const auto strengths = require_strengths(ctx);
  std::vector<TrainingExample> data;
  for (const auto& u : c.utterances) {
    auto it = strengths.find(u.id);
    if (it == strengths.end()) throw Error("no extracted strengths for " + u.id);
    data.push_back({&u, expand_syllable_strengths(it->second, u.syllables)});
  }
  AcousticModel model(model_config_for(ctx, c));
  ctx.log("model parameters: " + std::to_string(model.params().scalar_count()));
  TrainerOptions opts;
  opts.learning_rate = ctx.config.get_double("train.lr");
  opts.grad_clip = ctx.config.get_double("train.grad_clip");
  opts.seed = ctx.config.get_u64("seed");
  Trainer trainer(model, opts);
  const int steps = ctx.config.get_int("train.steps");
  const int batch_size = ctx.config.get_int("train.batch");
  const int log_every = std::max(1, ctx.config.get_int("train.log_every"));
  if (steps < 1 || batch_size < 1) throw Error("train.steps and train.batch must be positive");
  std::mt19937_64 rng(ctx.config.get_u64("seed") ^ 0x5EEDULL);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  const fs::path log_path = ctx.run_dir() / "train_log.tsv";
  std::ofstream log(log_path);
  log << "step\tacoustic\tmel\tstop\tlocal\tutt\ttotal\n";
  std::vector<TrainingExample> batch;
  for (int step = 1; step <= steps; ++step) {
    batch.clear();
    for (int b = 0; b < batch_size; ++b) batch.push_back(data[pick(rng)]);
    const LossBreakdown l = trainer.step(batch);
    if (step % log_every == 0 || step == 1 || step == steps) {
      log << step << '\t' << fmt(l.acoustic) << '\t' << fmt(l.mel) << '\t' << fmt(l.stop) << '\t'
          << fmt(l.local) << '\t' << fmt(l.utt) << '\t' << fmt(l.total) << '\n';
      ctx.log("step " + std::to_string(step) + " acoustic=" + fmt_short(l.acoustic) +
              " local=" + fmt_short(l.local) + " utt=" + fmt_short(l.utt));
    }
  }
  fit_prior_means(model, c.utterances);
  const fs::path ckpt = ctx.run_dir() / "model.ckpt";
  save_checkpoint(ckpt, model, static_cast<std::uint64_t>(steps));
  ctx.record(log_path);
  ctx.record(ckpt);
  ctx.out << "checkpoint\t" << ckpt.string() << "\n";
}

// synthesize -----------------------------------------------------------------------

struct SynthFlags {
  std::string mode = "control";
  std::string target;
  std::string reference;
  std::string emotion;
  std::string strengths = "constant:1";
  std::string name;
};

void cmd_synthesize(const Context& ctx, const SynthFlags& f) {
  const LoadedCorpus c = require_corpus(ctx);
  ctx.log_config();
  const LoadedCheckpoint ckpt = require_checkpoint(ctx);
  const AcousticModel& model = ckpt.model;
  const int neutral = c.manifest.neutral_index();

  const Utterance* target = nullptr;
  if (!f.target.empty()) {
    target = &find_utterance(c, f.target);
  } else {
    for (const auto& u : c.utterances) {
      if (u.emotion != neutral) {
        target = &u;
        break;
      }
    }
    if (!target) target = &c.utterances.front();
  }
  const TargetText text = TargetText::from_utterance(*target);

  SynthesisResult result;
  std::string stem = f.mode + "_" + target->id;
  if (f.mode == "transfer") {
    const Utterance& ref = f.reference.empty() ? *target : find_utterance(c, f.reference);
    result = synth_transfer(model, require_rankers(ctx, c.manifest), text, ref);
  } else if (f.mode == "predict") {
    const fs::path p = ctx.run_dir() / "classifier.txt";
    if (!fs::exists(p)) throw Error("missing " + p.string() + " (run train-classifier first)");
    result = synth_predict(model, TextEmotionClassifier::load(p), text);
  } else if (f.mode == "control") {
    ControlRequest req;
    req.category = f.emotion.empty() ? target->emotion : category_of(c.manifest, f.emotion);
    req.spec = parse_strength_spec(f.strengths);
    if (req.spec.kind == StrengthSpec::Kind::kFromReference) {
      const Utterance& ref = f.reference.empty() ? *target : find_utterance(c, f.reference);
      req.reference_strengths = require_rankers(ctx, c.manifest).extract(ref).per_syllable;
    }
    result = synth_control(model, text, req);
    const std::string kind = to_string(req.spec);
    stem = "control_" + c.manifest.category_names[static_cast<std::size_t>(req.category)] + "_" +
           kind.substr(0, kind.find(':')) + "_" + target->id;
  } else {
    throw Error("unknown mode '" + f.mode + "' (transfer, predict or control)");
  }

  const std::string name = f.name.empty() ? stem : f.name;
  const fs::path dir = ctx.run_dir() / "synth";
  fs::create_directories(dir);
  write_mel(dir / (name + ".mel"), result.mel);
  emit_curve_plot({{"synthesized", f0_proxy_curve(result.mel)}, {"reference", f0_proxy_curve(target->mel)}},
                  dir / (name + "_f0.png"), name);
  ctx.record(dir / (name + ".mel"));
  ctx.record(dir / (name + "_f0.png"));
  if (result.overran) {
    ctx.log("warning: decoder hit max_decode_steps without stopping; output is partial");
  }
  ctx.out << "mel\t" << (dir / (name + ".mel")).string() << "\nframes\t" << result.mel.rows()
          << "\nstop_step\t" << result.stop_step << "\noverran\t" << (result.overran ? 1 : 0)
          << "\nmean_f0_proxy\t" << fmt_short(mean_f0_proxy(result.mel)) << "\n";
}

// eval-mcd -------------------------------------------------------------------------

void cmd_eval_mcd(const Context& ctx, const std::string& level, int limit) {
  if (level != "syllable" && level != "sentence") {
    throw Error("--level must be syllable or sentence");
  }
  const LoadedCorpus c = require_corpus(ctx);
  ctx.log_config();
  const LoadedCheckpoint ckpt = require_checkpoint(ctx);
  const StrengthExtractor extractor = require_rankers(ctx, c.manifest);
  MCDReport report;
  int done = 0;
  for (const auto& u : c.utterances) {
    if (u.emotion == extractor.neutral() || !extractor.has(u.emotion)) continue;
    if (limit > 0 && done >= limit) break;
    const TargetText text = TargetText::from_utterance(u);
    SynthesisResult r;
    if (level == "syllable") {
      r = synth_transfer(ckpt.model, extractor, text, u);
    } else {
      const auto s = extractor.extract(u).per_syllable;
      double mean = 0;
      for (double v : s) mean += v;
      ControlRequest req;
      req.category = u.emotion;
      req.spec = StrengthSpec::constant(mean / static_cast<double>(s.size()));
      req.h_utt_override = ckpt.model.um_encode(u.mel);
      r = synth_control(ckpt.model, text, req);
    }
    report.add(u.id, c.manifest.category_names[static_cast<std::size_t>(u.emotion)],
               mcd_dtw_detail(r.mel, u.mel));
    ++done;
  }
  if (report.entries.empty()) throw Error("no emotional utterances to evaluate");
  const fs::path tsv = ctx.run_dir() / ("mcd_" + level + ".tsv");
  const fs::path json = ctx.run_dir() / ("mcd_" + level + ".json");
  report.write_tsv(tsv);
  report.write_json(json);
  ctx.record(tsv);
  ctx.record(json);
  ctx.out << "mcd_mean_db\t" << fmt_short(report.overall_mean()) << "\nutterances\t"
          << report.entries.size() << "\n";
}

// plot-f0 --------------------------------------------------------------------------

void cmd_plot_f0(const Context& ctx, const std::vector<std::string>& mels, const std::string& out_path) {
  ctx.log_config();
  if (mels.empty()) throw Error("plot-f0 needs at least one --mel file");
  std::vector<LabeledCurve> curves;
  for (const auto& m : mels) curves.push_back({fs::path(m).stem().string(), f0_proxy_curve(read_mel(m))});
  const fs::path path = out_path.empty() ? ctx.run_dir() / "f0.png" : fs::path(out_path);
  emit_curve_plot(curves, path, "f0 proxy");
  ctx.record(fs::absolute(path));
  ctx.out << "plot\t" << path.string() << "\n";
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"emotts: multi-scale emotional speech synthesis toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> overrides;
  std::string corpus_flag, run_dir_flag;
  app.add_option("--config", config_path, "key=value config file (default: $EMOTTS_CONFIG)");
  app.add_option("--set", overrides, "override one config key, key=value (repeatable)");
  app.add_option("--corpus", corpus_flag, "corpus directory holding manifest.tsv");
  app.add_option("--run-dir", run_dir_flag, "output directory for models and artifacts");

  std::optional<std::uint64_t> gen_seed;
  std::string gen_out;
  int gen_per = 0;
  auto* gen = app.add_subcommand("gen-corpus", "write a synthetic corpus with known strengths");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output directory (default: corpus key)");
  gen->add_option("--per-emotion", gen_per, "utterances per category");

  auto* prep = app.add_subcommand("prepare-corpus", "validate a manifest and its files");

  std::string ranker_emotion = "all";
  auto* ranker = app.add_subcommand("train-ranker", "fit per-emotion strength rankers");
  ranker->add_option("--emotion", ranker_emotion, "category name or 'all'");

  auto* extract = app.add_subcommand("extract-strengths", "score every syllable of the corpus");
  auto* classifier = app.add_subcommand("train-classifier", "fit the text emotion classifier");
  auto* tts = app.add_subcommand("train-tts", "train the acoustic model and conditioning modules");

  SynthFlags synth_flags;
  auto* synth = app.add_subcommand("synthesize", "synthesize one utterance");
  synth->add_option("--mode", synth_flags.mode, "transfer | predict | control")
      ->check(CLI::IsMember({"transfer", "predict", "control"}));
  synth->add_option("--target", synth_flags.target, "corpus utterance id supplying the text");
  synth->add_option("--reference", synth_flags.reference, "reference utterance id (transfer)");
  synth->add_option("--emotion", synth_flags.emotion, "category name (control)");
  synth->add_option("--strengths", synth_flags.strengths,
                    "constant:v | ramp_up | ramp_down | explicit:csv | from_reference");
  synth->add_option("--name", synth_flags.name, "output file stem");

  std::string mcd_level = "syllable";
  int mcd_limit = 0;
  auto* mcd = app.add_subcommand("eval-mcd", "parallel-transfer MCD over the corpus");
  mcd->add_option("--level", mcd_level, "syllable | sentence strength conditioning");
  mcd->add_option("--limit", mcd_limit, "evaluate at most N utterances (0 = all)");

  std::vector<std::string> plot_mels;
  std::string plot_out;
  auto* plot = app.add_subcommand("plot-f0", "plot f0 proxy curves of mel files");
  plot->add_option("--mel", plot_mels, "mel file (repeatable)");
  plot->add_option("--out", plot_out, "output PNG path");

  std::vector<std::string> argv_storage{"emotts"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    Context ctx{RunConfig{}, out, err, app.get_subcommands().front()->get_name()};
    if (config_path.empty()) {
      if (const char* env = std::getenv(kConfigEnv); env && *env) config_path = env;
    }
    if (!config_path.empty()) ctx.config.load_file(config_path);
    for (const auto& o : overrides) ctx.config.set_assignment(o);
    if (!corpus_flag.empty()) ctx.config.set("corpus", corpus_flag);
    if (!run_dir_flag.empty()) ctx.config.set("run_dir", run_dir_flag);

    if (gen->parsed()) cmd_gen_corpus(ctx, gen_seed, gen_out, gen_per);
    else if (prep->parsed()) cmd_prepare_corpus(ctx);
    else if (ranker->parsed()) cmd_train_ranker(ctx, ranker_emotion);
    else if (extract->parsed()) cmd_extract_strengths(ctx);
    else if (classifier->parsed()) cmd_train_classifier(ctx);
    else if (tts->parsed()) cmd_train_tts(ctx);
    else if (synth->parsed()) cmd_synthesize(ctx, synth_flags);
    else if (mcd->parsed()) cmd_eval_mcd(ctx, mcd_level, mcd_limit);
    else if (plot->parsed()) cmd_plot_f0(ctx, plot_mels, plot_out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace emotts

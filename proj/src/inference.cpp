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

#include "emotts/inference.hpp"

#include <cstdio>
#include <sstream>

namespace emotts {

std::vector<double> interpolate_strengths(std::span<const double> source, int target_len) {
  if (source.empty()) throw Error("interpolate_strengths: empty source");
  if (target_len < 1) throw Error("interpolate_strengths: target length must be >= 1");
  const auto k = static_cast<long>(source.size());
  std::vector<double> out(static_cast<std::size_t>(target_len));
  if (k == 1 || target_len == 1) {
    std::fill(out.begin(), out.end(), source[0]);
    return out;
  }
  // Position i maps to i*(k-1)/(L-1) in source index units; integer
  // arithmetic keeps grid points exact.
  const long span = target_len - 1;
  for (long i = 0; i < target_len; ++i) {
    const long num = i * (k - 1);
    const long lo = num / span;
    const long rem = num % span;
    const double a = source[static_cast<std::size_t>(lo)];
    if (rem == 0) {
      out[static_cast<std::size_t>(i)] = a;
    } else {
      const double b = source[static_cast<std::size_t>(lo + 1)];
      const double frac = static_cast<double>(rem) / static_cast<double>(span);
      out[static_cast<std::size_t>(i)] = a + frac * (b - a);
    }
  }
  return out;
}

StrengthSpec StrengthSpec::constant(double v) {
  StrengthSpec s;
  s.kind = Kind::kConstant;
  s.value = v;
  return s;
}

StrengthSpec StrengthSpec::ramp_up() {
  StrengthSpec s;
  s.kind = Kind::kRampUp;
  return s;
}

StrengthSpec StrengthSpec::ramp_down() {
  StrengthSpec s;
  s.kind = Kind::kRampDown;
  return s;
}

StrengthSpec StrengthSpec::explicit_values(std::vector<double> v) {
  StrengthSpec s;
  s.kind = Kind::kExplicit;
  s.values = std::move(v);
  return s;
}

StrengthSpec StrengthSpec::from_reference() {
  StrengthSpec s;
  s.kind = Kind::kFromReference;
  return s;
}

namespace {

double parse_strength(const std::string& token) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    throw Error("strength spec: '" + token + "' is not a number");
  }
  if (used != token.size()) throw Error("strength spec: '" + token + "' is not a number");
  return v;
}

}  // namespace

StrengthSpec parse_strength_spec(const std::string& text) {
  if (text == "ramp_up") return StrengthSpec::ramp_up();
  if (text == "ramp_down") return StrengthSpec::ramp_down();
  if (text == "from_reference") return StrengthSpec::from_reference();
  if (text.starts_with("constant:")) {
    const double v = parse_strength(text.substr(9));
    const double arr[] = {v};
    check_strength_range(arr);
    return StrengthSpec::constant(v);
  }
  if (text.starts_with("explicit:")) {
    std::vector<double> values;
    std::stringstream in(text.substr(9));
    std::string tok;
    while (std::getline(in, tok, ',')) values.push_back(parse_strength(tok));
    if (values.empty()) throw Error("strength spec: explicit list is empty");
    check_strength_range(values);
    return StrengthSpec::explicit_values(std::move(values));
  }
  throw Error("strength spec '" + text +
              "' not understood; use constant:v, ramp_up, ramp_down, explicit:a,b,... or "
              "from_reference");
}

std::string to_string(const StrengthSpec& spec) {
  switch (spec.kind) {
    case StrengthSpec::Kind::kRampUp:
      return "ramp_up";
    case StrengthSpec::Kind::kRampDown:
      return "ramp_down";
    case StrengthSpec::Kind::kFromReference:
      return "from_reference";
    case StrengthSpec::Kind::kConstant: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "constant:%.17g", spec.value);
      return buf;
    }
    case StrengthSpec::Kind::kExplicit: {
      std::string out = "explicit:";
      char buf[40];
      for (std::size_t i = 0; i < spec.values.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s%.17g", i ? "," : "", spec.values[i]);
        out += buf;
      }
      return out;
    }
  }
  return {};
}

std::vector<double> materialize(const StrengthSpec& spec, int syllable_count,
                                std::span<const double> reference) {
  if (syllable_count < 1) throw Error("materialize: need at least one syllable");
  const auto k = static_cast<std::size_t>(syllable_count);
  std::vector<double> out(k);
  switch (spec.kind) {
    case StrengthSpec::Kind::kConstant:
      std::fill(out.begin(), out.end(), spec.value);
      break;
    case StrengthSpec::Kind::kRampUp:
    case StrengthSpec::Kind::kRampDown:
      for (std::size_t i = 0; i < k; ++i) {
        const std::size_t step = spec.kind == StrengthSpec::Kind::kRampUp ? i : k - 1 - i;
        out[i] = k == 1 ? 0.5 : static_cast<double>(step) / static_cast<double>(k - 1);
      }
      break;
    case StrengthSpec::Kind::kExplicit:
      if (spec.values.size() != k) {
        throw Error("explicit strengths: got " + std::to_string(spec.values.size()) +
                    " values for " + std::to_string(k) + " syllables");
      }
      out = spec.values;
      break;
    case StrengthSpec::Kind::kFromReference:
      if (reference.empty()) throw Error("from_reference spec needs reference strengths");
      out = interpolate_strengths(reference, syllable_count);
      break;
  }
  check_strength_range(out);
  return out;
}

TargetText TargetText::from_utterance(const Utterance& u) {
  return TargetText{u.text, u.phonemes, u.syllables};
}

namespace {

void check_target(const AcousticModel& model, const TargetText& target) {
  target.phonemes.validate(model.config().vocabulary_size);
  if (target.syllables.empty()) throw Error("target text has no syllables");
  validate_spans(target.syllables, static_cast<int>(target.phonemes.ids.size()), -1);
}

Matrix local_rows(const AcousticModel& model, const TargetText& target,
                  std::span<const double> per_syllable) {
  const auto per_phoneme = expand_syllable_strengths(per_syllable, target.syllables);
  return model.lm_project(per_phoneme);
}

}  // namespace

ConditioningBundle transfer_bundle(const AcousticModel& model, const StrengthExtractor& extractor,
                                   const TargetText& target, const Utterance& reference) {
  check_target(model, target);
  if (reference.emotion != extractor.neutral() && !extractor.has(reference.emotion)) {
    throw Error("no ranker fitted for the reference emotion (category " +
                std::to_string(reference.emotion) + ")");
  }
  const StrengthSequence ref = extractor.extract(reference);
  const auto strengths =
      interpolate_strengths(ref.per_syllable, static_cast<int>(target.syllables.size()));
  return ConditioningBundle{
      model.gm_embed(EmotionPosterior::one_hot(model.config().categories, reference.emotion)),
      model.um_encode(reference.mel), local_rows(model, target, strengths)};
}

SynthesisResult synth_transfer(const AcousticModel& model, const StrengthExtractor& extractor,
                               const TargetText& target, const Utterance& reference) {
  return model.synthesize(target.phonemes, transfer_bundle(model, extractor, target, reference));
}

ConditioningBundle predict_bundle(const AcousticModel& model, const PosteriorSource& classifier,
                                  const TargetText& target) {
  check_target(model, target);
  if (classifier.category_count() != model.config().categories) {
    throw Error("classifier has " + std::to_string(classifier.category_count()) +
                " categories, model expects " + std::to_string(model.config().categories));
  }
  const auto posterior = classifier.predict_posterior(target.text);
  const auto strengths = model.lm_predict(target.phonemes);
  return ConditioningBundle{model.gm_embed(posterior), model.um_predict(target.phonemes),
                            model.lm_project(strengths)};
}

SynthesisResult synth_predict(const AcousticModel& model, const PosteriorSource& classifier,
                              const TargetText& target) {
  return model.synthesize(target.phonemes, predict_bundle(model, classifier, target));
}

ConditioningBundle control_bundle(const AcousticModel& model, const TargetText& target,
                                  const ControlRequest& request) {
  check_target(model, target);
  if (request.category < 0 || request.category >= model.config().categories) {
    throw Error("control: category " + std::to_string(request.category) + " out of range");
  }
  const auto strengths = materialize(request.spec, static_cast<int>(target.syllables.size()),
                                     request.reference_strengths);
  Vector h_utt = request.h_utt_override ? *request.h_utt_override : model.prior_mean(request.category);
  return ConditioningBundle{
      model.gm_embed(EmotionPosterior::one_hot(model.config().categories, request.category)),
      std::move(h_utt), local_rows(model, target, strengths)};
}

SynthesisResult synth_control(const AcousticModel& model, const TargetText& target,
                              const ControlRequest& request) {
  return model.synthesize(target.phonemes, control_bundle(model, target, request));
}

}  // namespace emotts

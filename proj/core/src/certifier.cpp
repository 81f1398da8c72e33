#include "ivcert/certifier.hpp"

#include <iomanip>

#include "ivcert/error.hpp"

namespace ivcert {

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::kCertifiedCorrect:
      return "certified_correct";
    case Verdict::kNotCertified:
      return "not_certified";
    case Verdict::kCertifiedWrong:
      return "certified_wrong";
  }
  return "unknown";
}

std::optional<int> certified_class(std::span<const Interval> logits) {
  if (logits.empty()) return std::nullopt;
  if (logits.size() == 1) {
    if (logits[0].lower > 0.0) return 1;
    if (logits[0].upper < 0.0) return 0;
    return std::nullopt;
  }
  for (std::size_t c = 0; c < logits.size(); ++c) {
    bool dominates = true;
    for (std::size_t i = 0; i < logits.size() && dominates; ++i) {
      if (i != c && !(logits[c].lower > logits[i].upper)) dominates = false;
    }
    if (dominates) return static_cast<int>(c);
  }
  return std::nullopt;
}

namespace {

Verdict verdict_for(std::span<const Interval> logits, int label) {
  const auto cls = certified_class(logits);
  if (!cls) return Verdict::kNotCertified;
  return *cls == label ? Verdict::kCertifiedCorrect : Verdict::kCertifiedWrong;
}

}  // namespace

SampleCertificate certify_sample(const IntervalModel& model, std::span<const double> x, int label,
                                 double test_eps) {
  if (x.size() != model.input_size()) {
    throw ShapeError("certify_sample: input has " + std::to_string(x.size()) +
                     " features, model expects " + std::to_string(model.input_size()));
  }
  const IntervalTensor out = model.evaluate(IntervalTensor::inflate(x, test_eps, Shape{1, x.size()}));
  SampleCertificate cert;
  cert.label = label;
  for (std::size_t j = 0; j < out.size(); ++j) cert.logits.push_back(out[j]);
  cert.verdict = verdict_for(cert.logits, label);
  return cert;
}

CertificationResult certified_accuracy(const IntervalModel& model, const Dataset& test,
                                       double test_eps) {
  if (test.empty()) throw DomainError("certified_accuracy: empty test set");
  if (test.num_features != model.input_size()) {
    throw ShapeError("certified_accuracy: test set has " + std::to_string(test.num_features) +
                     " features, model expects " + std::to_string(model.input_size()));
  }
  CertificationResult result;
  result.test_eps = test_eps;
  // Rows of a batched forward pass are independent, so one batch gives the
  // same bounds as certifying each sample on its own.
  const IntervalTensor out =
      model.evaluate(IntervalTensor::inflate(test.features, test_eps, Shape{test.size(), test.num_features}));
  const std::size_t m = out.cols();
  for (std::size_t i = 0; i < test.size(); ++i) {
    SampleCertificate cert;
    cert.index = i;
    cert.label = test.labels[i];
    for (std::size_t j = 0; j < m; ++j) cert.logits.push_back(out.at(i, j));
    cert.verdict = verdict_for(cert.logits, cert.label);
    switch (cert.verdict) {
      case Verdict::kCertifiedCorrect:
        ++result.certified_correct;
        break;
      case Verdict::kCertifiedWrong:
        ++result.certified_wrong;
        break;
      case Verdict::kNotCertified:
        ++result.not_certified;
        break;
    }
    result.samples.push_back(std::move(cert));
  }
  result.certified_accuracy =
      static_cast<double>(result.certified_correct) / static_cast<double>(test.size());
  return result;
}

void write_certificates_csv(std::ostream& out, const CertificationResult& result) {
  const std::size_t m = result.samples.empty() ? 1 : result.samples.front().logits.size();
  out << "index,label";
  if (m == 1) {
    out << ",logit_lower,logit_upper";
  } else {
    for (std::size_t j = 0; j < m; ++j) out << ",logit" << j << "_lower,logit" << j << "_upper";
  }
  out << ",verdict\n";
  out << std::setprecision(17);
  for (const auto& s : result.samples) {
    out << s.index << ',' << s.label;
    for (const auto& z : s.logits) out << ',' << z.lower << ',' << z.upper;
    out << ',' << to_string(s.verdict) << '\n';
  }
}

}  // namespace ivcert

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace bdscale {

// ============================================================================
// Birth-death chain specification
//
// A chain is the per-state law n -> (l_n, r_n) for n >= 1: step left with
// probability l_n, right with r_n, l_n + r_n = 1. State 0 is absorbing and
// has no law of its own; querying it is an error.
// ============================================================================

/// One-step law at a state: left with probability `l`, right with `r`.
struct StepLaw {
  double l = 0.0;
  double r = 0.0;
};

/// Analytic facts a family may contribute about its scale sequence
/// t_n = (l_1...l_n)/(r_1...r_n) when finite sampling cannot certify them
/// (slowly divergent series are undecidable from any finite sweep).
enum class SumHint { None, Diverges };
enum class TLimitHint { None, ConvergesToZero, DivergesToInfinity };

class ChainSpec;

/// r_n = right_prob for every state; classical gambler's-ruin walk.
struct ConstantBias {
  double right_prob = 0.5;
};

/// l_n = n/(2n+1), r_n = (n+1)/(2n+1); t_n = 1/(n+1). Recurrent, yet the
/// expected state diverges.
struct PaperHarmonic {};

/// Finite table of laws for states 1..entries.size(), with an explicit
/// tail rule for every state beyond it. No implicit extension.
struct Tabular {
  std::vector<StepLaw> entries;
  std::shared_ptr<const ChainSpec> tail;
};

namespace detail {

inline constexpr double kLawTolerance = 1e-12;  // |l + r - 1| allowed on input

inline void validate_law(const StepLaw& law, std::int64_t n) {
  if (!(law.l > 0.0) || !(law.l < 1.0) || !(law.r > 0.0) || !(law.r < 1.0) ||
      !(std::abs(law.l + law.r - 1.0) <= kLawTolerance)) {
    std::ostringstream msg;
    msg << "invalid transition law at state " << n << ": l=" << law.l
        << " r=" << law.r << " (need 0 < l,r < 1 and l + r = 1)";
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace detail

class ChainSpec {
 public:
  static ChainSpec constant_bias(double right_prob) {
    detail::validate_law({1.0 - right_prob, right_prob}, 1);
    ChainSpec spec;
    spec.family_ = ConstantBias{right_prob};
    return spec;
  }

  static ChainSpec paper_harmonic() {
    ChainSpec spec;
    spec.family_ = PaperHarmonic{};
    return spec;
  }

  static ChainSpec tabular(std::vector<StepLaw> entries, ChainSpec tail) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      detail::validate_law(entries[i], static_cast<std::int64_t>(i) + 1);
    }
    ChainSpec spec;
    spec.family_ = Tabular{std::move(entries),
                           std::make_shared<const ChainSpec>(std::move(tail))};
    return spec;
  }

  /// Parses the text forms `constant:p=0.6`, `paper-harmonic`, and
  /// `table:FILE,tail=SPEC` (FILE is CSV with header `n,l,r` and 1-based
  /// consecutive states; SPEC is itself a chain text form).
  static ChainSpec parse(const std::string& text);

  /// The law at state n >= 1. State 0 is absorbing (p_00 = 1) and rejected.
  StepLaw probabilities(std::int64_t n) const {
    if (n < 1) {
      throw std::domain_error(
          "probabilities: state 0 is absorbing and states are nonnegative; "
          "need n >= 1");
    }
    return std::visit(
        [n](const auto& fam) -> StepLaw {
          using F = std::decay_t<decltype(fam)>;
          if constexpr (std::is_same_v<F, ConstantBias>) {
            return {1.0 - fam.right_prob, fam.right_prob};
          } else if constexpr (std::is_same_v<F, PaperHarmonic>) {
            const double denom = static_cast<double>(2 * n + 1);
            return {static_cast<double>(n) / denom,
                    static_cast<double>(n + 1) / denom};
          } else {
            const auto size = static_cast<std::int64_t>(fam.entries.size());
            if (n <= size) return fam.entries[static_cast<std::size_t>(n - 1)];
            return fam.tail->probabilities(n);
          }
        },
        family_);
  }

  /// Whether sum(t_j) is known analytically to diverge. A finite table
  /// prefix rescales t_n by a positive constant, so the tail's verdict
  /// carries over.
  SumHint sum_hint() const {
    return std::visit(
        [](const auto& fam) -> SumHint {
          using F = std::decay_t<decltype(fam)>;
          if constexpr (std::is_same_v<F, ConstantBias>) {
            return fam.right_prob <= 0.5 ? SumHint::Diverges : SumHint::None;
          } else if constexpr (std::is_same_v<F, PaperHarmonic>) {
            return SumHint::Diverges;  // t_n = 1/(n+1), harmonic comparison
          } else {
            return fam.tail->sum_hint();
          }
        },
        family_);
  }

  /// Whether lim t_n is known analytically to be 0 or infinite.
  TLimitHint t_limit_hint() const {
    return std::visit(
        [](const auto& fam) -> TLimitHint {
          using F = std::decay_t<decltype(fam)>;
          if constexpr (std::is_same_v<F, ConstantBias>) {
            if (fam.right_prob > 0.5) return TLimitHint::ConvergesToZero;
            if (fam.right_prob < 0.5) return TLimitHint::DivergesToInfinity;
            return TLimitHint::None;
          } else if constexpr (std::is_same_v<F, PaperHarmonic>) {
            return TLimitHint::ConvergesToZero;
          } else {
            return fam.tail->t_limit_hint();
          }
        },
        family_);
  }

  /// Canonical-ish text form for reports. Tables parsed from a file keep
  /// their source path; programmatic tables render a summary.
  std::string text() const;

  /// Visits the concrete family (ConstantBias, PaperHarmonic, Tabular);
  /// lets hot loops inline the per-state law.
  template <class Visitor>
  decltype(auto) visit(Visitor&& visitor) const {
    return std::visit(std::forward<Visitor>(visitor), family_);
  }

  bool operator==(const ChainSpec& other) const {
    if (family_.index() != other.family_.index()) return false;
    if (const auto* cb = std::get_if<ConstantBias>(&family_)) {
      return cb->right_prob ==
             std::get<ConstantBias>(other.family_).right_prob;
    }
    if (std::holds_alternative<PaperHarmonic>(family_)) return true;
    const auto& a = std::get<Tabular>(family_);
    const auto& b = std::get<Tabular>(other.family_);
    if (a.entries.size() != b.entries.size()) return false;
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
      if (a.entries[i].l != b.entries[i].l || a.entries[i].r != b.entries[i].r)
        return false;
    }
    return *a.tail == *b.tail;
  }
  bool operator!=(const ChainSpec& other) const { return !(*this == other); }

 private:
  ChainSpec() = default;

  std::variant<ConstantBias, PaperHarmonic, Tabular> family_;
  std::string source_text_;  // set when parsed from text
};

// ============================================================================
// Text-form parsing
// ============================================================================

namespace detail {

inline std::vector<StepLaw> load_law_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("table: cannot open file '" + path + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument("table: empty file '" + path + "'");
  }
  // tolerate trailing CR from CRLF files
  auto strip = [](std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    return s;
  };
  if (strip(line) != "n,l,r") {
    throw std::invalid_argument("table: expected header 'n,l,r' in '" + path +
                                "', got '" + line + "'");
  }
  std::vector<StepLaw> entries;
  std::int64_t expect_n = 1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip(line);
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    std::int64_t n = 0;
    StepLaw law;
    try {
      std::size_t used = 0;
      if (!std::getline(row, field, ',')) throw std::invalid_argument("n");
      n = std::stoll(field, &used);
      if (used != field.size()) throw std::invalid_argument("n");
      if (!std::getline(row, field, ',')) throw std::invalid_argument("l");
      law.l = std::stod(field, &used);
      if (used != field.size()) throw std::invalid_argument("l");
      if (!std::getline(row, field, ',')) throw std::invalid_argument("r");
      law.r = std::stod(field, &used);
      if (used != field.size()) throw std::invalid_argument("r");
    } catch (const std::exception&) {
      throw std::invalid_argument("table: malformed row " +
                                  std::to_string(line_no) + " in '" + path +
                                  "': '" + line + "'");
    }
    if (n != expect_n) {
      throw std::invalid_argument(
          "table: states must be 1-based and consecutive; row " +
          std::to_string(line_no) + " has n=" + std::to_string(n) +
          ", expected " + std::to_string(expect_n));
    }
    validate_law(law, n);
    entries.push_back(law);
    ++expect_n;
  }
  if (entries.empty()) {
    throw std::invalid_argument("table: no rows in '" + path + "'");
  }
  return entries;
}

}  // namespace detail

inline ChainSpec ChainSpec::parse(const std::string& text) {
  ChainSpec spec = [&]() -> ChainSpec {
    if (text == "paper-harmonic") {
      return paper_harmonic();
    }
    if (text.rfind("constant:", 0) == 0) {
      const std::string params = text.substr(9);
      if (params.rfind("p=", 0) != 0) {
        throw std::invalid_argument(
            "constant: expected 'constant:p=VALUE', got '" + text + "'");
      }
      std::size_t used = 0;
      double p = 0.0;
      try {
        p = std::stod(params.substr(2), &used);
      } catch (const std::exception&) {
        throw std::invalid_argument("constant: bad probability in '" + text +
                                    "'");
      }
      if (used != params.size() - 2) {
        throw std::invalid_argument("constant: trailing junk in '" + text +
                                    "'");
      }
      return constant_bias(p);
    }
    if (text.rfind("table:", 0) == 0) {
      const std::string rest = text.substr(6);
      const std::size_t tail_pos = rest.find(",tail=");
      if (tail_pos == std::string::npos) {
        throw std::invalid_argument(
            "table: a finite table must declare an explicit tail, e.g. "
            "'table:FILE,tail=constant:p=0.5'");
      }
      const std::string path = rest.substr(0, tail_pos);
      const std::string tail_text = rest.substr(tail_pos + 6);
      if (path.empty() || tail_text.empty()) {
        throw std::invalid_argument("table: empty file path or tail in '" +
                                    text + "'");
      }
      return tabular(detail::load_law_table(path), parse(tail_text));
    }
    throw std::invalid_argument(
        "unknown chain spec '" + text +
        "' (expected constant:p=..., paper-harmonic, or table:FILE,tail=...)");
  }();
  spec.source_text_ = text;
  return spec;
}

namespace detail {

// shortest decimal form that still parses back to the same double
inline std::string shortest_round_trip(double v) {
  char buf[40];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

}  // namespace detail

inline std::string ChainSpec::text() const {
  if (!source_text_.empty()) return source_text_;
  return std::visit(
      [](const auto& fam) -> std::string {
        using F = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<F, ConstantBias>) {
          return "constant:p=" + detail::shortest_round_trip(fam.right_prob);
        } else if constexpr (std::is_same_v<F, PaperHarmonic>) {
          return "paper-harmonic";
        } else {
          std::ostringstream out;
          out << "table:<" << fam.entries.size()
              << " rows>,tail=" << fam.tail->text();
          return out.str();
        }
      },
      family_);
}

}  // namespace bdscale

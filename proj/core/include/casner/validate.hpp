#ifndef CASNER_VALIDATE_HPP
#define CASNER_VALIDATE_HPP

#include <span>
#include <string>
#include <vector>

#include "casner/types.hpp"

namespace casner {

struct Violation {
  std::string record_id;
  std::string code;     // "surface mismatch", "overlap", ...
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks every record invariant: non-empty text, unique ids, spans in range,
/// surface == text slice, no overlapping spans, labels contained in the
/// record's type list, well-formed type lists. Violations are report entries,
/// never exceptions.
ValidationReport validate_dataset(std::span<const AnnotatedSentence> ds);

}  // namespace casner

#endif  // CASNER_VALIDATE_HPP

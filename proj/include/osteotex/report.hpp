#pragma once

#include <string>
#include <string_view>

#include "osteotex/evaluation.hpp"

namespace osteotex::report {

/// Pretty-printed JSON with a fixed key order. Undefined metrics are null.
std::string to_json(const eval::MetricsReport& report);
eval::MetricsReport from_json(std::string_view text);

/// Two-column key/value summary, then a per-fold breakdown when folds are
/// present.
std::string to_text(const eval::MetricsReport& report);

/// `threshold,fpr,tpr` rows of the pooled ROC curve; empty body when only
/// one class was scored.
std::string roc_csv(const eval::MetricsReport& report);

}  // namespace osteotex::report

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlscale/allocate.hpp"
#include "rlscale/bootstrap.hpp"
#include "rlscale/preprocess.hpp"
#include "rlscale/scaling_laws.hpp"
#include "rlscale/synth.hpp"

namespace rlscale {

inline constexpr const char* kEfficiencyHeader = "task,utd,model_size,batch_size,threshold,data,data_std";
inline constexpr const char* kBestBatchHeader =
    "task,utd,model_size,b_bootstrap,kept_replicates,dropped_replicates,rng_seed";
inline constexpr const char* kFrontierHeader = "threshold,budget,sigma_star,n_star,data,compute";
inline constexpr const char* kContourHeader = "d_target,sigma,n";
inline constexpr const char* kFitSchema = "rlscale.fit/1";

/// data_std is written empty when absent.
void write_efficiency_csv(std::ostream& out, std::span<const EfficiencyPoint> points);
/// ParseError (with line and column) on malformed rows; EmptyInputError without a header.
std::vector<EfficiencyPoint> read_efficiency_csv(std::istream& in);

struct BestBatchRecord {
  std::string task_id;
  double sigma = 0.0;
  double model_size = 0.0;
  double b_bootstrap = 0.0;
  std::size_t kept = 0;
  std::size_t dropped = 0;
  std::uint64_t rng_seed = 0;
};

BestBatchRecord best_batch_record(const std::string& task_id, const BootstrapBatchResult& result);
void write_best_batch_csv(std::ostream& out, std::span<const BestBatchRecord> records);
std::vector<BestBatchRecord> read_best_batch_csv(std::istream& in);

void write_frontier_csv(std::ostream& out, std::span<const FrontierPoint> frontier);

struct Contour {
  double d_target = 0.0;
  std::vector<ContourPoint> points;
};
void write_contour_csv(std::ostream& out, std::span<const Contour> contours);

struct Provenance {
  std::string input_digest;
  std::optional<std::uint64_t> rng_seed;
};

nlohmann::json diagnostics_to_json(const FitResult& diagnostics);
nlohmann::json batch_rule_to_json(const BatchRuleResult& result, const Provenance& provenance);
nlohmann::json data_fits_to_json(const DataFitSet& set, const Provenance& provenance);
nlohmann::json shared_fits_to_json(std::span<const SharedFitResult> fits, std::span<const std::string> warnings,
                                   const Provenance& provenance);
nlohmann::json aggregated_fits_to_json(std::span<const AggregatedFitResult> fits,
                                       std::span<const std::string> warnings, const Provenance& provenance);

/// Throws ValidationError when the document is not a batch-rule fit.
BatchRuleFit batch_rule_from_json(const nlohmann::json& doc);

/// Per-(task, threshold) laws from any data-efficiency document; shared documents expand to one
/// entry per task. Only task_id, fit and unstable are filled.
std::vector<DataFitResult> data_fits_from_json(const nlohmann::json& doc);

nlohmann::json solution_to_json(const AllocationSolution& solution);
nlohmann::json frontier_laws_to_json(const FrontierLaws& laws);
nlohmann::json comparison_to_json(const ComparisonTable& table);
nlohmann::json sensitivity_to_json(std::span<const SensitivityRow> rows);

nlohmann::json data_fit_to_json(const DataFit& fit);
/// Accepts the additive keys {d_min, a, alpha, b, beta} or, with "form": "factored", the
/// coefficients of d_min (1 + (a/σ)^α + (b/N)^β).
DataFit data_fit_from_json(const nlohmann::json& j);

nlohmann::json synth_spec_to_json(const SynthSpec& spec);
/// Throws ValidationError on missing or malformed fields.
SynthSpec synth_spec_from_json(const nlohmann::json& j);

}  // namespace rlscale

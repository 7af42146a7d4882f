#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "sfdet/anchors.hpp"
#include "sfdet/costmodel.hpp"
#include "sfdet/dota.hpp"
#include "sfdet/proposals.hpp"

namespace sfdet {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";

/// Rounds to 6 decimals so JSON output matches the fixed CSV precision.
double round6(double v);
/// "%.6f".
std::string fixed6(double v);

// Config records. Readers fill unspecified keys from the defaults of the
// object passed in and reject unknown keys.
Json to_json(const AnchorSpec& spec);
AnchorSpec anchor_spec_from_json(const Json& j, AnchorSpec defaults = AnchorSpec::adjusted());

Json to_json(const Kernel& k);
Kernel kernel_from_json(const Json& j);

Json to_json(const PipelineConfig& cfg);
PipelineConfig pipeline_config_from_json(const Json& j, PipelineConfig defaults = {});

Json to_json(const ModelConfig& m);
ModelConfig model_config_from_json(const Json& j);

// Results.
Json to_json(const CostBreakdown& c);
Json to_json(const CoverageReport& r);
Json to_json(const std::vector<Proposal>& props);
Json to_json(const std::vector<BudgetRow>& rows);
Json to_json(const std::vector<TileWindow>& windows);
Json to_json(const SizeHistogram& h);

std::string coverage_csv(const CoverageReport& r);
std::string proposals_csv(const std::vector<Proposal>& props);
std::string budget_csv(const std::vector<BudgetRow>& rows);
std::string tiles_csv(const std::vector<TileWindow>& windows);
std::string histogram_csv(const SizeHistogram& h);

/// Reads "cx,cy,w,h,theta,score" rows; a header line is optional.
std::vector<Proposal> parse_proposals_csv(const std::string& text);

/// Side-by-side baseline/simplified table with Table-2 style columns.
std::string cost_table(const std::string& model, const CostBreakdown& baseline, const CostBreakdown& simplified);

}  // namespace sfdet

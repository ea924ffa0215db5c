#pragma once

#include "stpp/summaries.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace stpp {

enum class SliceAxis {
  fixed_t,  // statistic against r at fixed t0
  fixed_r,  // statistic against t at fixed r0
};

/// Grid indices at the quartiles of an axis of length n, duplicates removed.
std::vector<std::size_t> quartile_indices(std::size_t n);

/// Standalone SVG line chart of F_hat (dashed, diamond markers) and G_hat
/// (solid) slices. Charts with no defined values carry a warning note.
std::string render_slices(const SummaryEstimate& e, SliceAxis axis, const std::string& title);

/// Writes `<stem>_fixed_t.svg` and `<stem>_fixed_r.svg`; returns the paths.
std::vector<std::filesystem::path> write_slice_plots(const SummaryEstimate& e,
                                                     const std::filesystem::path& stem,
                                                     const std::string& title);

}  // namespace stpp

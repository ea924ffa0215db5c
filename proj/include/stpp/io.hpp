#pragma once

#include "stpp/geometry.hpp"
#include "stpp/summaries.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

namespace stpp {

class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal form; identical bits give identical text.
std::string format_double(double v);

/// `<stem>.window.json` next to a pattern CSV.
std::filesystem::path window_sidecar(const std::filesystem::path& csv);

/// Header `x1,...,xd,t`, one row per point; the window goes to the sidecar.
void write_pattern(const PointPattern& p, const std::filesystem::path& csv);
PointPattern read_pattern(const std::filesystem::path& csv);

std::string window_to_json(const Window& w);
Window window_from_json(const std::string& text);

/// `r,t,F_hat,G_hat,J_hat,K_hat,n_centers,n_probes,defined`, missing cells as NaN.
void write_summary_csv(const SummaryEstimate& e, std::ostream& os);
void write_summary_csv(const SummaryEstimate& e, const std::filesystem::path& path);

/// Summary columns followed by `lo,hi` for the enveloped statistic.
void write_envelope_csv(const SummaryEstimate& observed, const Envelope& env, std::ostream& os);
void write_envelope_csv(const SummaryEstimate& observed, const Envelope& env,
                        const std::filesystem::path& path);

/// Parses a summary (or envelope) CSV back into a SummaryEstimate. The range
/// grid is rebuilt from the distinct r and t values.
SummaryEstimate read_summary_csv(const std::filesystem::path& path);

}  // namespace stpp

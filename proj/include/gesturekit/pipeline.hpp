#pragma once

#include <filesystem>
#include <vector>

#include "gesturekit/config.hpp"
#include "gesturekit/metrics.hpp"

namespace gesturekit {

struct PipelineResult {
    MetricReport report;
    std::filesystem::path report_path;
    std::vector<std::filesystem::path> artifacts;
};

/// End-to-end demo: windowing -> RVQ training + encoding -> corruption ->
/// iterative + residual decoding -> RVQ decode -> TPS flow and warping ->
/// edge heatmaps -> metric report. Every artifact lands in out_dir; a fixed
/// seed gives byte-identical outputs. Stage failures propagate with the
/// stage name prefixed.
PipelineResult run_pipeline(const PipelineConfig& config, const std::filesystem::path& out_dir);

}  // namespace gesturekit

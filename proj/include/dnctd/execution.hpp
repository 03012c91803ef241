#pragma once

namespace dnctd {

/// Serial reference path or OpenMP path; both give identical results.
enum class Execution { serial, parallel };

}  // namespace dnctd

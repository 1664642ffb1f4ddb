// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef LATENTREC_COMMON_ERROR_HPP_
#define LATENTREC_COMMON_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <utility>

namespace latentrec {

// Error categories surface as distinct status codes at the C boundary.
enum class ErrorKind {
  kInvalidArgument,
  kIo,
  kFormat,
  kConfig,
  kNumeric,
  kState,
};

// Every failure carries the pipeline stage that raised it ("ingest",
// "sft", "checkpoint", ...) so the CLI can print stage-tagged messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string stage, const std::string& message)
      : std::runtime_error("[" + stage + "] " + message),
        kind_(kind),
        stage_(std::move(stage)) {}

  ErrorKind kind() const { return kind_; }
  const std::string& stage() const { return stage_; }

 private:
  ErrorKind kind_;
  std::string stage_;
};

}  // namespace latentrec

#endif  // LATENTREC_COMMON_ERROR_HPP_

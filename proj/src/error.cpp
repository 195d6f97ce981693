// Copyright 2026 The EAPMT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "eapmt/error.hpp"

namespace eapmt {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kSchema: return "schema error";
    case ErrorCode::kNotFound: return "not found";
    case ErrorCode::kReplayMiss: return "replay miss";
    case ErrorCode::kNetwork: return "network error";
    case ErrorCode::kEmptyResponse: return "empty response";
    case ErrorCode::kDegenerateOutput: return "degenerate output";
    case ErrorCode::kExplanationStage: return "explanation stage failed";
    case ErrorCode::kTranslationStage: return "translation stage failed";
    case ErrorCode::kProtocol: return "protocol error";
    case ErrorCode::kJudgeParse: return "judge output parse error";
    case ErrorCode::kRaggedGrid: return "ragged result grid";
    case ErrorCode::kInternal: return "internal error";
  }
  return "unknown error";
}

}  // namespace eapmt

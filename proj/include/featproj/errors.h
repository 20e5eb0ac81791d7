// Copyright 2026 The featproj-dp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FEATPROJ_ERRORS_H_
#define FEATPROJ_ERRORS_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace featproj {

// Raised when a caller breaks a documented precondition. These indicate bugs
// in the calling code, not bad luck at runtime.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Base for recoverable, expected failures (infeasible budgets, rank loss,
// malformed files).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RankDeficientError : public Error {
 public:
  RankDeficientError(std::int64_t requested, std::int64_t rank)
      : Error("requested " + std::to_string(requested) +
              " directions but numerical rank is " + std::to_string(rank)),
        requested_(requested),
        rank_(rank) {}

  std::int64_t requested() const { return requested_; }
  std::int64_t rank() const { return rank_; }

 private:
  std::int64_t requested_;
  std::int64_t rank_;
};

class InfinitePrivacyLossError : public Error {
 public:
  using Error::Error;
};

class CalibrationInfeasibleError : public Error {
 public:
  CalibrationInfeasibleError(double target, double achievable_floor)
      : Error("epsilon target " + std::to_string(target) +
              " is below the achievable floor " +
              std::to_string(achievable_floor)),
        target_(target),
        achievable_floor_(achievable_floor) {}

  double target() const { return target_; }
  double achievable_floor() const { return achievable_floor_; }

 private:
  double target_;
  double achievable_floor_;
};

namespace internal {
[[noreturn]] void ThrowContractViolation(const char* file, int line,
                                         const char* condition,
                                         const std::string& message);
}  // namespace internal

}  // namespace featproj

#define FEATPROJ_CHECK(cond, msg)                                       \
  do {                                                                  \
    if (!(cond)) {                                                      \
      ::featproj::internal::ThrowContractViolation(__FILE__, __LINE__,  \
                                                   #cond, (msg));       \
    }                                                                   \
  } while (false)

#endif  // FEATPROJ_ERRORS_H_

// Copyright 2026 The resetsim Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace resetsim {

/// Failure categories. The CLI maps each one to its own exit code.
enum class ErrorCategory {
    invalid_argument = 1,
    config = 2,
    convergence = 3,
    no_minimum = 4,
    timing = 5,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    [[nodiscard]] ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& what)
        : Error(ErrorCategory::invalid_argument, what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

struct ConvergenceError : Error {
    explicit ConvergenceError(const std::string& what)
        : Error(ErrorCategory::convergence, what) {}
};

struct NoMinimumError : Error {
    explicit NoMinimumError(const std::string& what) : Error(ErrorCategory::no_minimum, what) {}
};

struct TimingError : Error {
    explicit TimingError(const std::string& what) : Error(ErrorCategory::timing, what) {}
};

}  // namespace resetsim

// SPDX-License-Identifier: Apache-2.0
//
// mbsense: multiband delay estimation with stochastic particle-based VBI
// Copyright (C) 2026 The mbsense authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef MBSENSE_ERRORS_HPP
#define MBSENSE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mbsense
{

// Invalid scenario, channel or hyper-parameter configuration.
class ConfigError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// Bad argument to a numerical routine (sizes, ranges).
class ArgumentError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of a function (e.g. noise std <= 0).
class DomainError : public std::domain_error
{
public:
    using std::domain_error::domain_error;
};

// An estimator could not produce a result for the given data (e.g. too few roots
// inside the unit circle). Callers may retry with different settings.
class EstimationError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Least-squares system too ill-conditioned to solve reliably.
class IllConditionedError : public EstimationError
{
public:
    IllConditionedError(const std::string &what, double condition_number);
    double condition_number() const noexcept { return condition_; }

private:
    double condition_;
};

// Broken internal invariant; always a bug.
class InternalError : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

} // namespace mbsense

#endif

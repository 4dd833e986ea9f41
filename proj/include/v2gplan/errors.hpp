/*
 * Copyright (C) 2026 The v2gplan Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
*/

#ifndef V2GPLAN__ERRORS_HPP
#define V2GPLAN__ERRORS_HPP

#include <stdexcept>
#include <string>

namespace v2gplan {

/// Malformed or out-of-contract arguments (non-finite coordinates, unsorted
/// records, negative distances, stays outside the simulated day).
class InvalidInput : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Parameter sets that violate their documented invariants.
class InvalidConfig : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

class InvalidGeometry : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// A ratio whose denominator vanishes, e.g. night fraction of an all-zero
/// demand curve.
class UndefinedFraction : public std::domain_error
{
public:
  using std::domain_error::domain_error;
};

/// Zero-variance regressor in a simple linear regression.
class DegenerateRegressor : public std::domain_error
{
public:
  using std::domain_error::domain_error;
};

/// Raised when a simulation result breaks one of the engine invariants.
class InvariantViolation : public std::logic_error
{
public:
  using std::logic_error::logic_error;
};

} // namespace v2gplan

#endif // V2GPLAN__ERRORS_HPP

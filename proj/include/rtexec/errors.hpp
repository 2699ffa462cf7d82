// Copyright 2026 The rtexec Authors
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

#ifndef RTEXEC__ERRORS_HPP_
#define RTEXEC__ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rtexec
{

class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class TimeUnderflow : public Error
{
public:
  using Error::Error;
};

/// An event was scheduled before the current virtual time.
class PastDue : public Error
{
public:
  using Error::Error;
};

/// A scheduler or executor operation was applied to a thread in the wrong state.
class InvalidState : public Error
{
public:
  using Error::Error;
};

/// Budget accounting went negative. Indicates a simulator bug.
class BudgetUnderflow : public Error
{
public:
  using Error::Error;
};

/// Validation failure; `field()` names the offending parameter.
class InvalidParams : public Error
{
public:
  InvalidParams(std::string field, const std::string & what)
  : Error(field + ": " + what), field_(std::move(field)) {}

  const std::string & field() const noexcept {return field_;}

private:
  std::string field_;
};

class DuplicateTopic : public Error
{
public:
  explicit DuplicateTopic(const std::string & topic)
  : Error("topic already registered: " + topic) {}
};

/// Malformed trace input; `line()` is 1-based.
class TraceParseError : public Error
{
public:
  TraceParseError(std::size_t line, const std::string & what)
  : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept {return line_;}

private:
  std::size_t line_;
};

}  // namespace rtexec

#endif  // RTEXEC__ERRORS_HPP_

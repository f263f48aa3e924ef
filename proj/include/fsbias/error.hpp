/*
 * Copyright 2026 The fsbias Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace fsbias {

// Every library failure derives from Error. The CLI maps the three families
// onto its exit codes: UsageError -> 1, DataError -> 2, BackendError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration, flags, or preconditions on caller-supplied parameters.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Input data violates a contract: malformed record, unknown label,
// insufficient class population, degenerate metric input.
class DataError : public Error {
 public:
  using Error::Error;
};

// Scoring or embedding endpoint failed or returned something unusable.
class BackendError : public Error {
 public:
  using Error::Error;
};

// Transient transport failure; eligible for retry.
class TransportError : public BackendError {
 public:
  using BackendError::BackendError;
};

}  // namespace fsbias

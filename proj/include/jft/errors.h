// Copyright 2026 The JFT Authors.
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

#ifndef JFT_ERRORS_H_
#define JFT_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jft {

// Bad input: malformed files, out-of-range values, violated preconditions.
// The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Unknown user, item, word or out-of-range index.
class LookupError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Training diverged or produced a non-finite objective. Exit code 2.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical evaluation produced a non-finite value. Exit code 2.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace jft

#endif  // JFT_ERRORS_H_

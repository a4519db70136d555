//
// Copyright 2026 The fedvt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef FEDVT_STATS_H_
#define FEDVT_STATS_H_

#include <cmath>
#include <cstddef>
#include <span>

namespace fedvt {

// Neumaier (improved Kahan) compensated sum.
template <typename Scalar = double>
class CompensatedSum {
 public:
  void Add(Scalar x) {
    const Scalar t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  Scalar Value() const { return sum_ + compensation_; }

 private:
  Scalar sum_ = 0;
  Scalar compensation_ = 0;
};

template <typename Scalar = double>
struct MeanWithError {
  Scalar mean = 0;
  Scalar std_error = 0;
  std::size_t count = 0;
};

// Sample mean and standard error of the mean. Summation is compensated and
// strictly in input order, so results do not depend on how the inputs were
// produced (e.g. by which worker).
template <typename Scalar>
MeanWithError<Scalar> SummarizeSamples(std::span<const Scalar> samples) {
  MeanWithError<Scalar> out;
  out.count = samples.size();
  if (samples.empty()) return out;
  CompensatedSum<Scalar> sum;
  for (Scalar x : samples) sum.Add(x);
  const Scalar n = static_cast<Scalar>(samples.size());
  out.mean = sum.Value() / n;
  if (samples.size() < 2) return out;
  CompensatedSum<Scalar> squares;
  for (Scalar x : samples) {
    const Scalar dx = x - out.mean;
    squares.Add(dx * dx);
  }
  out.std_error = std::sqrt(squares.Value() / (n - 1) / n);
  return out;
}

}  // namespace fedvt

#endif  // FEDVT_STATS_H_

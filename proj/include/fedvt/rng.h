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

#ifndef FEDVT_RNG_H_
#define FEDVT_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace fedvt {

// SplitMix64 finalizer.
constexpr uint64_t Mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives a child seed from a master seed and an ordered list of keys. The
// derivation is a fold of Mix64, so distinct key tuples give unrelated
// streams and the same tuple always gives the same stream.
constexpr uint64_t DeriveSeed(uint64_t master,
                              std::initializer_list<uint64_t> keys) {
  uint64_t state = Mix64(master);
  for (uint64_t key : keys) state = Mix64(state ^ Mix64(key + 0x632be59bd9b4e019ULL));
  return state;
}

// Stream tags used as the leading key of DeriveSeed.
inline constexpr uint64_t kDataStream = 1;
inline constexpr uint64_t kMechanismStream = 2;
inline constexpr uint64_t kPublicRandomnessStream = 3;
inline constexpr uint64_t kTrialStream = 4;
inline constexpr uint64_t kPriorStream = 5;

// Counter-based generator: the n-th output is Mix64(key + n * gamma). Cheap
// to construct, which matters because every (client, round, trial) triple
// gets its own stream.
class StreamRng {
 public:
  using result_type = uint64_t;

  explicit StreamRng(uint64_t key) : state_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double Uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  uint64_t state_;
};

}  // namespace fedvt

#endif  // FEDVT_RNG_H_

/*
 * Copyright 2026 The unirank Authors.
 *
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

// Seed-pinned separable ranking data shared by the tests and the
// acceptance binary.

#ifndef UNIRANK_TESTS_SYNTHETIC_HPP_
#define UNIRANK_TESTS_SYNTHETIC_HPP_

#include <cstddef>
#include <cstdint>

#include "unirank/data.hpp"

namespace unirank::testing {

struct SyntheticSpec {
  std::size_t queries = 100;
  std::size_t docs_per_query = 20;
  std::size_t noise_features = 4;
  Rating max_rating = 4;
  std::uint64_t seed = 7;
};

// Feature 1 equals rating / max_rating; the remaining features are uniform
// noise in [0, 1]. Every query holds at least two distinct ratings.
Dataset separable_dataset(const SyntheticSpec& spec);

}  // namespace unirank::testing

#endif  // UNIRANK_TESTS_SYNTHETIC_HPP_

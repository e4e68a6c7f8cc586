// Copyright 2026 The lqgmfg Authors
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

// Counter-based random streams.
//
// Every replication of every experiment draws from its own Philox4x32-10
// stream. The key is the master seed; the upper half of the 128-bit counter
// is a stream id hashed from (purpose tag, N, replication). Streams are
// therefore independent of scheduling order and worker count.

#ifndef LQGMFG_RNG_H_
#define LQGMFG_RNG_H_

#include <array>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace lqgmfg {

class Philox4x32 {
 public:
  using result_type = std::uint64_t;

  Philox4x32(std::uint64_t key, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  // Raw block function: ten rounds over (counter, key).
  static std::array<std::uint32_t, 4> Block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key);

  std::uint64_t key() const { return key_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void Refill();

  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;  // number of unused 64-bit words left in buffer_
};

// Provenance of a stream, recorded in manifests for bit-exact replay.
struct StreamId {
  std::uint64_t master_seed = 0;
  std::string_view tag;
  std::int64_t n = 0;
  std::int64_t replication = 0;

  std::uint64_t Hash() const;
};

// Engine plus a cached standard normal sampler.
class RandomStream {
 public:
  explicit RandomStream(const StreamId& id)
      : engine_(id.master_seed, id.Hash()) {}
  RandomStream(std::uint64_t master_seed, std::string_view tag, std::int64_t n,
               std::int64_t replication)
      : RandomStream(StreamId{master_seed, tag, n, replication}) {}

  double Normal() { return normal_(engine_); }
  // Uniform on the open interval (0, 1).
  double Uniform();
  Philox4x32& engine() { return engine_; }

 private:
  Philox4x32 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace lqgmfg

#endif  // LQGMFG_RNG_H_

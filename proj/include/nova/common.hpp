// Copyright 2026 The nova authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <bit>
#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nova {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: bad scenario files, dangling references, invalid options.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Violated call contract (wrong vector length, unknown name, empty input).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Fixed-width bitset used for coverage vectors and bin masks.
///
/// Bits beyond size() are kept zero so popcount and whole-word operations
/// never need trailing-bit fixups.
class BitVec {
public:
    BitVec() = default;
    explicit BitVec(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

    std::size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }

    bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
    void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
    void reset(std::size_t i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }

    void clear() { std::fill(words_.begin(), words_.end(), 0); }

    std::size_t count() const {
        std::size_t n = 0;
        for (std::uint64_t w : words_) n += std::popcount(w);
        return n;
    }

    void or_with(const BitVec& other) {
        require_same_size(other);
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
    }

    /// popcount(this & other)
    std::size_t count_and(const BitVec& other) const {
        require_same_size(other);
        std::size_t n = 0;
        for (std::size_t i = 0; i < words_.size(); ++i)
            n += std::popcount(words_[i] & other.words_[i]);
        return n;
    }

    /// popcount((this ^ other) & mask)
    std::size_t count_xor_masked(const BitVec& other, const BitVec& mask) const {
        require_same_size(other);
        require_same_size(mask);
        std::size_t n = 0;
        for (std::size_t i = 0; i < words_.size(); ++i)
            n += std::popcount((words_[i] ^ other.words_[i]) & mask.words_[i]);
        return n;
    }

    bool any_and(const BitVec& other) const {
        require_same_size(other);
        for (std::size_t i = 0; i < words_.size(); ++i)
            if (words_[i] & other.words_[i]) return true;
        return false;
    }

    bool operator==(const BitVec& other) const = default;

    const std::vector<std::uint64_t>& words() const { return words_; }

    /// Indices of set bits, ascending.
    std::vector<std::size_t> ones() const {
        std::vector<std::size_t> out;
        for (std::size_t w = 0; w < words_.size(); ++w) {
            std::uint64_t bits = words_[w];
            while (bits) {
                out.push_back(w * 64 + std::countr_zero(bits));
                bits &= bits - 1;
            }
        }
        return out;
    }

private:
    void require_same_size(const BitVec& other) const {
        if (other.size_ != size_) throw ContractError("BitVec size mismatch");
    }

    std::size_t size_ = 0;
    std::vector<std::uint64_t> words_;
};

/// Bits of a coverage vector restricted to one bin cluster, packed densely.
/// Keeps the per-comparison cost proportional to the cluster size rather
/// than to the full bin space.
class PackedProjection {
public:
    PackedProjection() = default;
    PackedProjection(const BitVec& v, const std::vector<std::size_t>& bin_indices)
        : nbits_(bin_indices.size()), words_((bin_indices.size() + 63) / 64, 0) {
        for (std::size_t k = 0; k < bin_indices.size(); ++k)
            if (v.test(bin_indices[k])) words_[k >> 6] |= std::uint64_t{1} << (k & 63);
    }

    std::size_t hamming(const PackedProjection& other) const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < words_.size(); ++i)
            n += std::popcount(words_[i] ^ other.words_[i]);
        return n;
    }

    std::size_t size() const { return nbits_; }

private:
    std::size_t nbits_ = 0;
    std::vector<std::uint64_t> words_;
};

}  // namespace nova

#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "triggerbench/clock.hpp"

namespace tb {

inline constexpr std::uint64_t kMiB = 1024ull * 1024ull;

/// Fixed-size byte block. Storage is default-initialised so large blocks are
/// not zeroed twice before being filled.
class ByteBuffer {
 public:
  explicit ByteBuffer(std::size_t n) : data_(new std::uint8_t[n]), size_(n) {}

  std::size_t size() const { return size_; }
  std::span<std::uint8_t> span() { return {data_.get(), size_}; }
  std::span<const std::uint8_t> span() const { return {data_.get(), size_}; }
  const std::uint8_t* data() const { return data_.get(); }

  bool operator==(const ByteBuffer& o) const {
    return size_ == o.size_ && std::memcmp(data_.get(), o.data_.get(), size_) == 0;
  }

 private:
  std::unique_ptr<std::uint8_t[]> data_;
  std::size_t size_;
};

using SharedBytes = std::shared_ptr<const ByteBuffer>;

/// Recycles payload blocks so a run touches fresh pages only while warming up.
class BufferPool : public std::enable_shared_from_this<BufferPool> {
 public:
  static std::shared_ptr<BufferPool> create() {
    return std::shared_ptr<BufferPool>(new BufferPool());
  }

  std::shared_ptr<ByteBuffer> acquire(std::size_t n) {
    std::unique_ptr<ByteBuffer> buf;
    {
      std::lock_guard lk(m_);
      for (auto it = idle_.begin(); it != idle_.end(); ++it) {
        if ((*it)->size() == n) {
          buf = std::move(*it);
          idle_.erase(it);
          break;
        }
      }
    }
    if (!buf) buf = std::make_unique<ByteBuffer>(n);
    std::weak_ptr<BufferPool> home = weak_from_this();
    return std::shared_ptr<ByteBuffer>(buf.release(), [home](ByteBuffer* b) {
      if (auto pool = home.lock()) {
        pool->give_back(std::unique_ptr<ByteBuffer>(b));
      } else {
        delete b;
      }
    });
  }

  // Allocates and touches `count` blocks of `n` bytes ahead of a timed run.
  void reserve(std::size_t count, std::size_t n) {
    std::vector<std::shared_ptr<ByteBuffer>> held;
    held.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      held.push_back(acquire(n));
      auto s = held.back()->span();
      std::memset(s.data(), 0, s.size());
    }
  }

  std::size_t idle() const {
    std::lock_guard lk(m_);
    return idle_.size();
  }

 private:
  BufferPool() = default;

  void give_back(std::unique_ptr<ByteBuffer> b) {
    std::lock_guard lk(m_);
    idle_.push_back(std::move(b));
  }

  mutable std::mutex m_;
  std::vector<std::unique_ptr<ByteBuffer>> idle_;
};

/// One step's data blob plus metadata as it flows through staging.
struct StepPayload {
  int step_index = 0;
  std::string variable;
  SharedBytes bytes;
  std::optional<bool> qualified_hint;
  Clock::time_point produced_at{};

  std::size_t size() const { return bytes ? bytes->size() : 0; }
};

}  // namespace tb

#pragma once

#include <functional>
#include <iosfwd>
#include <string>

namespace tfk3d {

/// Writes a file atomically: the writer streams into a temporary in the
/// same directory which is then renamed over the target.
void atomic_write(const std::string& path, const std::function<void(std::ostream&)>& writer);

void append_u32_le(std::string& out, std::uint32_t v);
void append_u64_le(std::string& out, std::uint64_t v);

}  // namespace tfk3d

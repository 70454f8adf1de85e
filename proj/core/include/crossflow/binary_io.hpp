// Copyright 2026 The Crossflow Authors
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

#ifndef CROSSFLOW__BINARY_IO_HPP_
#define CROSSFLOW__BINARY_IO_HPP_

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

namespace crossflow::io
{

// Little-endian primitives, independent of host byte order.

void write_magic(std::ostream & os, std::string_view magic);
void write_u32(std::ostream & os, std::uint32_t v);
void write_u64(std::ostream & os, std::uint64_t v);
void write_f64(std::ostream & os, double v);
void write_f64s(std::ostream & os, std::span<const double> v);

/// Reads len bytes and throws Error("<what>: bad magic ...") on mismatch.
void expect_magic(std::istream & is, std::string_view magic, std::string_view what);
std::uint32_t read_u32(std::istream & is);
std::uint64_t read_u64(std::istream & is);
double read_f64(std::istream & is);
void read_f64s(std::istream & is, std::span<double> out);
/// Throws unless the stream is exhausted.
void expect_eof(std::istream & is, std::string_view what);

/// Shortest round-trip decimal form ("%.17g" then trimmed via to_chars).
std::string format_double(double v);
/// Strict parse of a full token; throws Error on trailing junk.
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::uint64_t hash_file(const std::string & path);

}  // namespace crossflow::io

#endif  // CROSSFLOW__BINARY_IO_HPP_

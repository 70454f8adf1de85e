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

#include "crossflow/binary_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <vector>

#include "crossflow/common.hpp"

namespace crossflow
{

std::string to_hex(std::uint64_t v)
{
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf.data(), 16);
}

}  // namespace crossflow

namespace crossflow::io
{

namespace
{

template <typename T>
void put_le(std::ostream & os, T v)
{
  std::array<char, sizeof(T)> b{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  }
  os.write(b.data(), b.size());
  if (!os) {
    throw Error("write failed");
  }
}

template <typename T>
T get_le(std::istream & is)
{
  std::array<unsigned char, sizeof(T)> b{};
  is.read(reinterpret_cast<char *>(b.data()), b.size());
  if (is.gcount() != static_cast<std::streamsize>(b.size())) {
    throw Error("unexpected end of file");
  }
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(b[i]) << (8 * i);
  }
  return v;
}

}  // namespace

void write_magic(std::ostream & os, std::string_view magic)
{
  os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

void write_u32(std::ostream & os, std::uint32_t v) { put_le(os, v); }
void write_u64(std::ostream & os, std::uint64_t v) { put_le(os, v); }
void write_f64(std::ostream & os, double v) { put_le(os, std::bit_cast<std::uint64_t>(v)); }

void write_f64s(std::ostream & os, std::span<const double> v)
{
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char *>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
    if (!os) {
      throw Error("write failed");
    }
  } else {
    for (double d : v) {
      write_f64(os, d);
    }
  }
}

void expect_magic(std::istream & is, std::string_view magic, std::string_view what)
{
  std::string got(magic.size(), '\0');
  is.read(got.data(), static_cast<std::streamsize>(got.size()));
  if (is.gcount() != static_cast<std::streamsize>(got.size()) || got != magic) {
    throw Error(std::string(what) + ": bad magic (expected " + std::string(magic) + ")");
  }
}

std::uint32_t read_u32(std::istream & is) { return get_le<std::uint32_t>(is); }
std::uint64_t read_u64(std::istream & is) { return get_le<std::uint64_t>(is); }
double read_f64(std::istream & is) { return std::bit_cast<double>(get_le<std::uint64_t>(is)); }

void read_f64s(std::istream & is, std::span<double> out)
{
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char *>(out.data()), static_cast<std::streamsize>(out.size_bytes()));
    if (is.gcount() != static_cast<std::streamsize>(out.size_bytes())) {
      throw Error("unexpected end of file");
    }
  } else {
    for (double & d : out) {
      d = read_f64(is);
    }
  }
}

void expect_eof(std::istream & is, std::string_view what)
{
  if (is.peek() != std::char_traits<char>::eof()) {
    throw Error(std::string(what) + ": trailing bytes after payload");
  }
}

std::string format_double(double v)
{
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) {
    throw Error("format_double failed");
  }
  return std::string(buf.data(), ptr);
}

double parse_double(std::string_view s)
{
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error("not a number: '" + std::string(s) + "'");
  }
  return v;
}

long long parse_int(std::string_view s)
{
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error("not an integer: '" + std::string(s) + "'");
  }
  return v;
}

std::uint64_t hash_file(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open " + path);
  }
  Fnv1a h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.digest();
}

}  // namespace crossflow::io

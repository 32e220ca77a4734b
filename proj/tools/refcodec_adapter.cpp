// SPDX-License-Identifier: Apache-2.0
// The reference codec behind the external adapter protocol.
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <iterator>
#include <string>
#include <vector>

#include "pathbench/adapters.hpp"
#include "pathbench/error.hpp"
#include "pathbench/image.hpp"
#include "pathbench/refcodec.hpp"

namespace {

pathbench::Bytes read_stdin() {
  pathbench::Bytes data;
  std::vector<char> buf(1 << 16);
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), stdin)) > 0) data.insert(data.end(), buf.begin(), buf.begin() + n);
  return data;
}

void write_stdout(std::span<const pathbench::Byte> data) {
  if (std::fwrite(data.data(), 1, data.size(), stdout) != data.size() || std::fflush(stdout) != 0)
    throw pathbench::Error("short write on stdout");
}

int usage() {
  std::cerr << "usage: pathbench-refcodec-adapter [--subsample] capabilities | encode --quality <q> | decode\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace pathbench;
  std::vector<std::string> args(argv + 1, argv + argc);
  RefCodecOptions options;
  if (!args.empty() && args.front() == "--subsample") {
    options.subsample_420 = true;
    args.erase(args.begin());
  }
  if (args.empty()) return usage();
  try {
    const RefCodec codec(options);
    if (args[0] == "capabilities" && args.size() == 1) {
      std::cout << codec_info_to_json(codec.info()) << "\n";
      return 0;
    }
    if (args[0] == "encode" && args.size() == 3 && args[1] == "--quality") {
      const double q = std::stod(args[2]);
      const Tile tile = read_pnm(read_stdin());
      write_stdout(codec.encode(tile, q).bytes);
      return 0;
    }
    if (args[0] == "decode" && args.size() == 1) {
      write_stdout(write_pnm(refcodec_decode(read_stdin())));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "pathbench-refcodec-adapter: " << e.what() << "\n";
    return 1;
  }
  return usage();
}

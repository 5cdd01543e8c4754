#ifndef XIDS_CLI_HPP
#define XIDS_CLI_HPP

#include "xids/data.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace xids {

/// Runs the command line (arguments exclude the program name) and returns
/// the process exit code: 0 ok, 2 input, 3 training guard, 4 layout.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "n=10000,informative=3,noise=12,categorical=2,redundant=1,seed=7,label_noise=0.01"
SyntheticConfig parse_synthetic(const std::string& text, std::uint64_t default_seed);

/// The processed table written by `preprocess`: features, label, attack_cat, split.
struct ProcessedTable {
    DataTable table;
    std::vector<std::string> split;  // "train" or "test" per row
};

void write_processed(const PreparedData& data, const std::string& path);
ProcessedTable load_processed(const std::string& path);

}  // namespace xids

#endif  // XIDS_CLI_HPP

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace chunklearn {

/// Exit codes: 0 success, 1 runtime failure, 2 bad configuration or input.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_run(const std::string& config_path, const std::string& out_dir, std::ostream& out,
            std::ostream& err);
int cmd_extract(const std::string& table_path, double t_g, const std::string& grammar,
                const std::string& sizes, double r_plus, const std::string& out_path,
                std::ostream& out, std::ostream& err);
int cmd_fit(const std::string& curve_path, const std::string& out_path, std::ostream& out,
            std::ostream& err);
int cmd_plot(const std::string& curve_path, const std::string& out_svg, int smoothing,
             std::ostream& err);
int cmd_grammars(std::ostream& out);

}  // namespace chunklearn

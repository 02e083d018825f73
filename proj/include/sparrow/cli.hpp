#ifndef SPARROW_CLI_HPP
#define SPARROW_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace sparrow::cli
{

enum ExitCode : int
{
    exit_ok        = 0,
    exit_usage     = 1,
    exit_numerical = 2
};

/// Entry point shared by the executable and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_simulate(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cmd_estimate(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cmd_bench(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cmd_equiv(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace sparrow::cli

#endif // SPARROW_CLI_HPP

#include <iostream>
#include <string>
#include <vector>

#include <sparrow/cli.hpp>

int main(int argc, char** argv)
{
    const std::vector<std::string> args(argv + 1, argv + argc);
    try {
        return sparrow::cli::run(args, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "fatal: " << e.what() << "\n";
        return sparrow::cli::exit_numerical;
    }
}

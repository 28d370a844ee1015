// Standalone DIMACS front end for the embedded CDCL solver. Follows the
// usual solver conventions: exit 10 with "v" model lines when satisfiable,
// exit 20 when unsatisfiable. Useful as a reference implementation of the
// external-solver contract and as a drop-in for --sat-solver external:PATH.

#include <fstream>
#include <iostream>
#include <sstream>

#include "boolmin/sat.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: boolmin-sat FILE.cnf\n";
        return 1;
    }
    std::ifstream in(argv[1]);
    if (!in) {
        std::cerr << "cannot open " << argv[1] << '\n';
        return 1;
    }
    std::ostringstream buf;
    buf << in.rdbuf();

    try {
        boolmin::Cnf cnf = boolmin::parse_dimacs(buf.str());
        boolmin::SatResult result = boolmin::solve(cnf);
        if (result.status == boolmin::SatStatus::Satisfiable) {
            std::cout << "s SATISFIABLE\n";
            std::cout << "v";
            for (int v = 1; v <= cnf.num_vars; ++v)
                std::cout << ' ' << (result.model[v] ? v : -v);
            std::cout << " 0\n";
            return 10;
        }
        std::cout << "s UNSATISFIABLE\n";
        return 20;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

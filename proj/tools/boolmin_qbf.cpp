// Standalone QDIMACS front end for the universal-expansion engine,
// restricted to exists-forall-exists prefixes. Exit 10 with "V" lines for
// the outer existential assignment when true, exit 20 when false. Serves
// as a reference for the external QBF contract and as a drop-in for
// --qbf-solver external:PATH.

#include <fstream>
#include <iostream>
#include <sstream>

#include "boolmin/qbf.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: boolmin-qbf FILE.qdimacs\n";
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
        boolmin::QbfInstance q = boolmin::parse_qdimacs(buf.str());
        boolmin::QbfResult result = boolmin::solve_expansion(q);
        if (result.status == boolmin::QbfStatus::True) {
            std::cout << "s cnf 1\n";
            for (int v : q.outer_exists)
                std::cout << "V " << (result.outer_model.at(v) ? v : -v) << " 0\n";
            return 10;
        }
        std::cout << "s cnf 0\n";
        return 20;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

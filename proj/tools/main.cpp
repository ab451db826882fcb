#include "app.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return sgl::app::run(argc, argv, std::cout, std::cerr);
}

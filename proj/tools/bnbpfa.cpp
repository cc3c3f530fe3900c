#include "bnbpfa/app.hpp"

int main(int argc, char** argv) { return bnbpfa::run_app(argc, argv); }

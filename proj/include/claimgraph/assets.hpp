#pragma once

#include <string_view>

// Bundled copies of the files under assets/.
namespace claimgraph::assets {

std::string_view boilerplate_list();
std::string_view verdict_table();
std::string_view language_families();

}  // namespace claimgraph::assets

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace reggio {

enum class Cap { Iso, Var, Mut, Tmp, Paused, Imm };

inline constexpr Cap kAllCaps[] = {Cap::Iso, Cap::Var, Cap::Mut, Cap::Tmp, Cap::Paused, Cap::Imm};

const char* cap_name(Cap k);
std::optional<Cap> cap_from_name(const std::string& s);

// mut, tmp, var and paused all point into a region on the stack.
bool open(Cap k);

// k1 sees k2 as the result. nullopt is the undefined entry.
std::optional<Cap> vpa(Cap outer, Cap inner);

struct Type;
using TypeP = std::shared_ptr<const Type>;

// A leaf is "k C" or "k Cell[param]"; otherwise a binary union.
struct Type {
  bool is_union = false;
  Cap cap = Cap::Mut;
  std::string cls;  // "Cell" when param is set
  TypeP param;
  TypeP left, right;

  bool is_cell() const { return !is_union && param != nullptr; }
};

TypeP leaf(Cap k, std::string cls);
TypeP cell(Cap k, TypeP param);
TypeP join(TypeP a, TypeP b);  // collapses structurally equal arms
TypeP union_of(const std::vector<TypeP>& ts);

bool same(const TypeP& a, const TypeP& b);
std::string show(const TypeP& t);

void leaves(const TypeP& t, std::vector<const Type*>& out);
std::vector<const Type*> leaves(const TypeP& t);

// Every leaf has a capability in ks. Does not look inside Cell parameters.
bool cap(std::initializer_list<Cap> ks, const TypeP& t);
bool cap_not(std::initializer_list<Cap> ks, const TypeP& t);
bool is_open_type(const TypeP& t);
bool classtype(const TypeP& t);

bool subtype(const TypeP& a, const TypeP& b);
bool equiv(const TypeP& a, const TypeP& b);

TypeP make_iso(const TypeP& t);
TypeP make_mut(const TypeP& t);
TypeP make_imm(const TypeP& t);
TypeP make_cell(const TypeP& t);
TypeP with_cap(const TypeP& t, Cap from, Cap to);

// Adapt every leaf capability through vpa(k, .). nullptr if any leaf is undefined.
TypeP adapt(Cap k, const TypeP& t);

struct Field {
  std::string name;
  TypeP type;
};

struct ClassDecl {
  std::string name;
  std::vector<Field> fields;
};

class ClassTable {
 public:
  ClassTable();
  void add(ClassDecl c);
  bool has(const std::string& name) const;
  const ClassDecl* find(const std::string& name) const;
  const std::vector<std::string>& order() const { return order_; }

  // Field type of f in the class head of a leaf. Cell[t].val is t.
  TypeP ftype(const Type& leaf, const std::string& f) const;
  std::vector<std::string> field_names(const std::string& cls) const;

  // Error text, empty when the type is well formed against this table.
  std::string wf_error(const TypeP& t) const;

 private:
  std::map<std::string, ClassDecl> classes_;
  std::vector<std::string> order_;
};

// Union over leaves of vpa(k, ftype(CL, f)). nullptr if any piece is undefined.
TypeP fresult(const ClassTable& ct, const TypeP& t, const std::string& f);

// Union over leaves of the raw declared field type.
TypeP ftype_union(const ClassTable& ct, const TypeP& t, const std::string& f);

inline const std::string kCell = "Cell";
inline const std::string kUnit = "Unit";
inline const std::string kVal = "val";

}  // namespace reggio

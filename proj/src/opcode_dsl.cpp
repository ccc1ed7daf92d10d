//===- opcode_dsl.cpp - Opcode map and flow DSL parsing ------------------===//
//
// Part of the accelhost project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "accelhost/opcode_dsl.h"
#include "accelhost/error.h"

#include <cctype>
#include <set>
#include <sstream>

namespace accelhost {

//===----------------------------------------------------------------------===//
// AST helpers
//===----------------------------------------------------------------------===//

Action Action::send(int arg) {
  Action a;
  a.kind = Kind::Send;
  a.arg = arg;
  return a;
}

Action Action::sendLiteral(uint32_t value) {
  Action a;
  a.kind = Kind::SendLiteral;
  a.literal = value;
  return a;
}

Action Action::sendDim(int arg, int dim) {
  Action a;
  a.kind = Kind::SendDim;
  a.arg = arg;
  a.dim = dim;
  return a;
}

Action Action::sendIdxLoop(int loopDim) {
  Action a;
  a.kind = Kind::SendIdx;
  a.dim = loopDim;
  a.hasArg = false;
  return a;
}

Action Action::sendIdx(int arg, int dim) {
  Action a;
  a.kind = Kind::SendIdx;
  a.arg = arg;
  a.dim = dim;
  return a;
}

Action Action::recv(int arg) {
  Action a;
  a.kind = Kind::Recv;
  a.arg = arg;
  return a;
}

bool Action::operator==(const Action &other) const {
  if (kind != other.kind)
    return false;
  switch (kind) {
  case Kind::SendLiteral:
    return literal == other.literal;
  case Kind::Send:
  case Kind::Recv:
    return arg == other.arg;
  case Kind::SendDim:
    return arg == other.arg && dim == other.dim;
  case Kind::SendIdx:
    return hasArg == other.hasArg && dim == other.dim &&
           (!hasArg || arg == other.arg);
  }
  return false;
}

const std::vector<Action> *OpcodeMap::find(const std::string &id) const {
  for (const auto &entry : entries)
    if (entry.first == id)
      return &entry.second;
  return nullptr;
}

bool OpcodeMap::operator==(const OpcodeMap &other) const {
  return entries == other.entries;
}

FlowNode FlowNode::leaf(std::string id) {
  FlowNode n;
  n.isLeaf = true;
  n.id = std::move(id);
  return n;
}

FlowNode FlowNode::group(std::vector<FlowNode> children) {
  FlowNode n;
  n.isLeaf = false;
  n.children = std::move(children);
  return n;
}

bool FlowNode::operator==(const FlowNode &other) const {
  if (isLeaf != other.isLeaf)
    return false;
  if (isLeaf)
    return id == other.id;
  return children == other.children;
}

int FlowNode::depth() const {
  if (isLeaf)
    return 0;
  int inner = 0;
  for (const auto &child : children)
    inner = std::max(inner, child.depth());
  return inner + 1;
}

//===----------------------------------------------------------------------===//
// Lexer
//===----------------------------------------------------------------------===//

namespace {

struct Token {
  enum class Kind {
    Ident,
    Number,
    String,
    LAngle,
    RAngle,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Equals,
    End,
  };
  Kind kind = Kind::End;
  std::string text;
  uint64_t value = 0; // Number payload.
  bool overflow = false;
  int line = 1;
  int col = 1;
};

class Lexer {
public:
  explicit Lexer(const std::string &text) : text(text) {}

  Token next() {
    skipTrivia();
    Token tok;
    tok.line = line;
    tok.col = col;
    if (pos >= text.size()) {
      tok.kind = Token::Kind::End;
      return tok;
    }
    char c = text[pos];
    switch (c) {
    case '<':
      return single(tok, Token::Kind::LAngle);
    case '>':
      return single(tok, Token::Kind::RAngle);
    case '(':
      return single(tok, Token::Kind::LParen);
    case ')':
      return single(tok, Token::Kind::RParen);
    case '[':
      return single(tok, Token::Kind::LBracket);
    case ']':
      return single(tok, Token::Kind::RBracket);
    case ',':
      return single(tok, Token::Kind::Comma);
    case '=':
      return single(tok, Token::Kind::Equals);
    default:
      break;
    }
    if (c == '"')
      return lexString(tok);
    if (std::isdigit(static_cast<unsigned char>(c)))
      return lexNumber(tok);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
      return lexIdent(tok);
    throw Error(Error::Kind::SyntaxError,
                "unexpected character '" + std::string(1, c) + "' at line " +
                    std::to_string(line) + ", column " + std::to_string(col));
  }

private:
  void advance() {
    if (text[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }

  void skipTrivia() {
    while (pos < text.size()) {
      char c = text[pos];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
        continue;
      }
      if (c == '/' && pos + 1 < text.size() && text[pos + 1] == '/') {
        while (pos < text.size() && text[pos] != '\n')
          advance();
        continue;
      }
      break;
    }
  }

  Token single(Token tok, Token::Kind kind) {
    tok.kind = kind;
    tok.text = std::string(1, text[pos]);
    advance();
    return tok;
  }

  Token lexString(Token tok) {
    advance(); // Opening quote.
    std::string value;
    while (pos < text.size() && text[pos] != '"') {
      if (text[pos] == '\n')
        throw Error(Error::Kind::SyntaxError,
                    "unterminated string at line " + std::to_string(tok.line));
      value.push_back(text[pos]);
      advance();
    }
    if (pos >= text.size())
      throw Error(Error::Kind::SyntaxError,
                  "unterminated string at line " + std::to_string(tok.line));
    advance(); // Closing quote.
    tok.kind = Token::Kind::String;
    tok.text = value;
    return tok;
  }

  Token lexNumber(Token tok) {
    uint64_t value = 0;
    std::string raw;
    bool hex = false;
    if (text[pos] == '0' && pos + 1 < text.size() &&
        (text[pos + 1] == 'x' || text[pos + 1] == 'X')) {
      hex = true;
      raw += text[pos];
      advance();
      raw += text[pos];
      advance();
      if (pos >= text.size() ||
          !std::isxdigit(static_cast<unsigned char>(text[pos])))
        throw Error(Error::Kind::SyntaxError,
                    "malformed hex literal at line " + std::to_string(tok.line) +
                        ", column " + std::to_string(tok.col));
    }
    bool overflow = false;
    while (pos < text.size()) {
      char c = text[pos];
      int digit;
      if (std::isdigit(static_cast<unsigned char>(c)))
        digit = c - '0';
      else if (hex && std::isxdigit(static_cast<unsigned char>(c)))
        digit = 10 + (std::tolower(c) - 'a');
      else
        break;
      value = value * (hex ? 16 : 10) + static_cast<uint64_t>(digit);
      if (value > 0xFFFFFFFFFFFFull)
        overflow = true; // Clamp detection; exact value no longer needed.
      raw.push_back(c);
      advance();
    }
    tok.kind = Token::Kind::Number;
    tok.text = raw;
    tok.value = value;
    tok.overflow = overflow;
    return tok;
  }

  Token lexIdent(Token tok) {
    std::string value;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) ||
            text[pos] == '_' || text[pos] == '.')) {
      value.push_back(text[pos]);
      advance();
    }
    tok.kind = Token::Kind::Ident;
    tok.text = value;
    return tok;
  }

  const std::string &text;
  size_t pos = 0;
  int line = 1;
  int col = 1;
};

class Parser {
public:
  explicit Parser(const std::string &text) : lexer(text) { consume(); }

  OpcodeMap parseMap() {
    // Optional "opcode_map" keyword plus angle brackets.
    bool wrapped = false;
    if (tok.kind == Token::Kind::Ident && tok.text == "opcode_map") {
      consume();
      expect(Token::Kind::LAngle, "'<' after opcode_map");
      wrapped = true;
    } else if (tok.kind == Token::Kind::LAngle) {
      consume();
      wrapped = true;
    }

    OpcodeMap map;
    std::set<std::string> seen;
    while (true) {
      std::string id = parseEntryId();
      if (!seen.insert(id).second)
        throw Error(Error::Kind::DuplicateOpcodeId,
                    "duplicate opcode id '" + id + "'");
      expect(Token::Kind::Equals, "'=' after opcode id");
      map.entries.emplace_back(id, parseActionList());
      if (tok.kind == Token::Kind::Comma) {
        consume();
        continue;
      }
      break;
    }

    if (wrapped)
      expect(Token::Kind::RAngle, "'>' closing opcode_map");
    expectEnd();
    return map;
  }

  FlowNode parseFlow() {
    // Optional keyword ("opcode_flow" or "init_opcodes") plus angle brackets.
    bool wrapped = false;
    if (tok.kind == Token::Kind::Ident &&
        (tok.text == "opcode_flow" || tok.text == "init_opcodes")) {
      consume();
      expect(Token::Kind::LAngle, "'<' after flow keyword");
      wrapped = true;
    } else if (tok.kind == Token::Kind::LAngle) {
      consume();
      wrapped = true;
    }

    if (tok.kind != Token::Kind::LParen)
      throw Error(Error::Kind::SyntaxError,
                  "flow must start with a '(' group" + location());
    FlowNode root = parseGroup();

    if (wrapped) {
      if (tok.kind != Token::Kind::RAngle)
        throw Error(Error::Kind::UnbalancedParens,
                    "expected '>' closing flow" + location());
      consume();
    }
    expectEnd();
    return root;
  }

private:
  void consume() { tok = lexer.next(); }

  std::string location() const {
    return " at line " + std::to_string(tok.line) + ", column " +
           std::to_string(tok.col);
  }

  void expect(Token::Kind kind, const std::string &what) {
    if (tok.kind != kind)
      throw Error(Error::Kind::SyntaxError, "expected " + what + location());
    consume();
  }

  void expectEnd() {
    if (tok.kind != Token::Kind::End)
      throw Error(Error::Kind::SyntaxError,
                  "trailing characters" + location());
  }

  std::string parseEntryId() {
    if (tok.kind == Token::Kind::Ident || tok.kind == Token::Kind::String) {
      std::string id = tok.text;
      if (id.empty())
        throw Error(Error::Kind::SyntaxError, "empty opcode id" + location());
      consume();
      return id;
    }
    throw Error(Error::Kind::SyntaxError, "expected opcode id" + location());
  }

  std::vector<Action> parseActionList() {
    expect(Token::Kind::LBracket, "'[' starting action list");
    std::vector<Action> actions;
    while (true) {
      actions.push_back(parseAction());
      if (tok.kind == Token::Kind::Comma) {
        consume();
        continue;
      }
      break;
    }
    expect(Token::Kind::RBracket, "']' closing action list");
    return actions;
  }

  uint32_t parseU32() {
    if (tok.kind != Token::Kind::Number)
      throw Error(Error::Kind::SyntaxError, "expected integer" + location());
    if (tok.overflow || tok.value > 0xFFFFFFFFull)
      throw Error(Error::Kind::LiteralOutOfRange,
                  "literal " + tok.text + " does not fit in 32 bits");
    uint32_t value = static_cast<uint32_t>(tok.value);
    consume();
    return value;
  }

  int parseIndex(const char *what) {
    if (tok.kind != Token::Kind::Number)
      throw Error(Error::Kind::SyntaxError,
                  std::string("expected ") + what + location());
    if (tok.overflow || tok.value > 0x7FFFFFFFull)
      throw Error(Error::Kind::LiteralOutOfRange,
                  std::string(what) + " " + tok.text + " out of range");
    int value = static_cast<int>(tok.value);
    consume();
    return value;
  }

  Action parseAction() {
    if (tok.kind != Token::Kind::Ident)
      throw Error(Error::Kind::SyntaxError, "expected action" + location());
    std::string name = tok.text;
    consume();
    expect(Token::Kind::LParen, "'(' after action name");
    Action action;
    if (name == "send") {
      action = Action::send(parseIndex("argument index"));
    } else if (name == "send_literal") {
      action = Action::sendLiteral(parseU32());
    } else if (name == "send_dim") {
      int first = parseIndex("argument index");
      if (tok.kind == Token::Kind::Comma) {
        consume();
        action = Action::sendDim(first, parseIndex("dimension index"));
      } else {
        action = Action::sendDim(first, 0);
      }
    } else if (name == "send_idx") {
      int first = parseIndex("index");
      if (tok.kind == Token::Kind::Comma) {
        consume();
        action = Action::sendIdx(first, parseIndex("dimension index"));
      } else {
        action = Action::sendIdxLoop(first);
      }
    } else if (name == "recv") {
      action = Action::recv(parseIndex("argument index"));
    } else {
      throw Error(Error::Kind::SyntaxError, "unknown action '" + name + "'");
    }
    expect(Token::Kind::RParen, "')' closing action");
    return action;
  }

  FlowNode parseGroup() {
    expect(Token::Kind::LParen, "'('");
    std::vector<FlowNode> children;
    while (true) {
      if (tok.kind == Token::Kind::Ident) {
        children.push_back(FlowNode::leaf(tok.text));
        consume();
        continue;
      }
      if (tok.kind == Token::Kind::LParen) {
        children.push_back(parseGroup());
        continue;
      }
      break;
    }
    if (tok.kind != Token::Kind::RParen)
      throw Error(Error::Kind::UnbalancedParens,
                  "expected ')' closing flow group" + location());
    if (children.empty())
      throw Error(Error::Kind::SyntaxError, "empty flow group" + location());
    consume();
    return FlowNode::group(std::move(children));
  }

  Lexer lexer;
  Token tok;
};

std::string hex32(uint32_t value) {
  std::ostringstream os;
  os << "0x" << std::uppercase << std::hex << value;
  return os.str();
}

void printAction(std::ostringstream &os, const Action &action) {
  switch (action.kind) {
  case Action::Kind::Send:
    os << "send(" << action.arg << ")";
    break;
  case Action::Kind::SendLiteral:
    os << "send_literal(" << hex32(action.literal) << ")";
    break;
  case Action::Kind::SendDim:
    os << "send_dim(" << action.arg << ", " << action.dim << ")";
    break;
  case Action::Kind::SendIdx:
    if (action.hasArg)
      os << "send_idx(" << action.arg << ", " << action.dim << ")";
    else
      os << "send_idx(" << action.dim << ")";
    break;
  case Action::Kind::Recv:
    os << "recv(" << action.arg << ")";
    break;
  }
}

} // namespace

//===----------------------------------------------------------------------===//
// Public API
//===----------------------------------------------------------------------===//

OpcodeMap parseOpcodeMap(const std::string &text) {
  Parser parser(text);
  return parser.parseMap();
}

FlowNode parseOpcodeFlow(const std::string &text) {
  Parser parser(text);
  return parser.parseFlow();
}

std::string printActions(const std::vector<Action> &actions) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < actions.size(); ++i) {
    if (i)
      os << ", ";
    printAction(os, actions[i]);
  }
  os << "]";
  return os.str();
}

std::string printOpcodeMap(const OpcodeMap &map) {
  std::ostringstream os;
  os << "opcode_map<";
  for (size_t i = 0; i < map.entries.size(); ++i) {
    if (i)
      os << ", ";
    os << map.entries[i].first << " = " << printActions(map.entries[i].second);
  }
  os << ">";
  return os.str();
}

std::string printFlowBody(const FlowNode &node) {
  if (node.isLeaf)
    return node.id;
  std::string out = "(";
  for (size_t i = 0; i < node.children.size(); ++i) {
    if (i)
      out += " ";
    out += printFlowBody(node.children[i]);
  }
  out += ")";
  return out;
}

std::string printOpcodeFlow(const FlowNode &root) {
  return "opcode_flow<" + printFlowBody(root) + ">";
}

} // namespace accelhost
